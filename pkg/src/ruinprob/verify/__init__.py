"""Independent oracles and property checks for the closed-form solutions."""
