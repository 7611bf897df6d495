"""Standalone plugin executables built on the synthetic oracle.

Each plugin follows the file-exchange contract: it is invoked as
``executable <input_dir> <output_dir>`` and communicates only through
files, exactly like an external neural component would.
"""
