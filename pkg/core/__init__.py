"""
AMOS-VPR Core Package
"""

__version__ = "1.0.0"
__author__ = "AMOS-VPR Team"
