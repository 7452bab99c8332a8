"""emgrid: coupled electromigration / thermomigration / IR-drop aging
analysis for on-chip power grids."""

__version__ = "0.1.0"
