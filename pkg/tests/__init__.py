# tests/__init__.py

"""
tests/__init__.py

Test package initialization for the damped-wave resolvent laboratory.
"""
