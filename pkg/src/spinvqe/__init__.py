"""Ground-state preparation of spin chains on an emulated digital quantum simulator."""

__version__ = "0.1.0"
