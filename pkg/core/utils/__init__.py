"""
Utility components for AMOS-VPR
"""
