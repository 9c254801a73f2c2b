class ExporterError(Exception):
    """Bad input, incompatible checkpoint, or malformed sample file."""
