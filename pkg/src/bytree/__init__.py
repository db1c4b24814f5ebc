"""Tamagawa numbers and Neron component groups of BY trees."""

__version__ = "0.1.0"
