"""Mixed scalar curvature of almost-product manifolds: identities,
integrals, variations and Euler-Lagrange residuals, checked numerically.
"""

__version__ = "0.1.0"
