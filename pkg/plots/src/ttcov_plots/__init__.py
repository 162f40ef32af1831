from .core import (
    KINDS,
    PlotSpec,
    SchemaError,
    aggregate,
    aggregate_as_records,
    read_rows,
    render,
)

__version__ = "0.1.0"
