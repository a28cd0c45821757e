"""Entry point for python -m graphpoincare."""

from graphpoincare.cli import main

main()
