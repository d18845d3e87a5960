"""Unipotent periods on degenerating families of marked elliptic curves.

Subpackage map:

- ncalg: truncated noncommutative series over generic coefficient rings
- periodring: the exact coefficient ring of zeta/elliptic/log symbols
- mzv: multiple zeta values, polylogarithms, shuffle regularization
- kz: genus-zero transport (associator, fusing, rotation) and the ODE oracle
- elliptic: Eisenstein series, iterated integrals at the cusp, the loop factor
- curves: stable graphs of (1,n)-type, residue assignments, Moebius gluing
- periods: assembly of period series along paths and ring-membership checking
- cli: batch command-line front end
"""

__version__ = "0.1.0"
