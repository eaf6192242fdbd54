"""Two-channel passive detection of cyclostationary signals."""
