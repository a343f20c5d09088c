"""Core components: command line, configuration, logging and persistence."""
