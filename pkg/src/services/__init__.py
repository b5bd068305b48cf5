"""
Services module for walker-lab.
"""
