"""
Utility modules - the unglamorous heroes of any codebase.
Dataset files, synthetic data, and worker pools live here.
"""
