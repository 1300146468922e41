"""Types for semequal configurations and reports."""
