"""
Adapters module for walker-lab: file storage and the command line.
"""
