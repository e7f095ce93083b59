"""Publication-style figure rendering for mechsqueeze CSV outputs.

Consumes only the CSV tables the primary tool emits; computes no physics.
One command per figure: mechsqueeze-fig2, mechsqueeze-fig3, mechsqueeze-fig4.
"""

__version__ = "0.1.0"

from .io import SchemaError, read_table

__all__ = ["SchemaError", "read_table", "__version__"]
