"""coarse-lab: exact computational laboratory for the coarse geometry of
James-type Banach spaces."""

__version__ = "0.1.0"
