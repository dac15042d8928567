"""Walk, concentration and sweep experiments."""
