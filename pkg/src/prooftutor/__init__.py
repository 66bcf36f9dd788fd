"""Data-driven logic-proof tutor with proactive, productivity-aware hints."""

__version__ = "0.1.0"
