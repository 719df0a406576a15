"""Secrecy analysis of a RIS-assisted mixed RF/FSO relay link."""

__version__ = "0.1.0"
