"""Private seams (typing engine, logging, readers, config). Not part of the public API."""
