"""Volume optimisation over semialgebraic sets with moment/SOS relaxations."""
