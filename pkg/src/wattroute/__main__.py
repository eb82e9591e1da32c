"""Allow `python -m wattroute` alongside the console script."""

from .cli import main

main()
