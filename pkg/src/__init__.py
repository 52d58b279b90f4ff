"""
Step-Program Table Question Answering

Represents table-QA programs as commented step sequences, executes them
over normalized in-memory tables, generates them with an LLM under
error-guided refinement, and evaluates and ensembles their answers.
"""

__version__ = "0.1.0"
