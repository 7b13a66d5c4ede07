"""lacomp: a small compiler for dense linear algebra equations.

Takes a matrix equation annotated with operand properties, decomposes it
into families of algorithms built from library-style kernels (Cholesky,
QR, eigendecomposition, triangular solves, products), ranks them by
symbolic flop cost, schedules them over problem sequences, validates them
numerically and emits pseudo-code.
"""

__version__ = "0.1.0"
