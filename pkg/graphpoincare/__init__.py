"""graphpoincare - discrete L^p Poincare inequalities on graphs and trees."""

__version__ = "0.1.0"
