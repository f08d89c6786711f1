"""Interactive analog-layout editing engine with a language front end."""

__version__ = "0.1.0"
