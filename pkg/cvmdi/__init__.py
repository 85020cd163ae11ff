"""
#########################################
##      created by: Al Muller
##       filename: cvmdi/__init__.py
#########################################
"""

__version__ = "0.1.0"
