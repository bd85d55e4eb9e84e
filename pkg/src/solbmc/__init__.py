"""solbmc: bounded symbolic model checking for the Sol subset of Solidity."""

__version__ = "0.1.0"
