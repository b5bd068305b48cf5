"""
Common modules for walker-lab.
"""
