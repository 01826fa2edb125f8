"""
SpanJudge
=========
Entity-level evaluation of named-entity-recognition output. Predictions are
compared with gold annotations and every disagreement is sorted into one of
five mismatch types; exact, relaxed, SemEval-style and learning-based
F-scores are computed from that ledger. Right-label/overlapping-span
mismatches can be refined with a trainable entity classifier or with expert
judgement files.
"""

__version__ = "0.0.1"

# __all__ = ['common', 'evaluate', 'generate_data', 'ml', 'parsers', 'report', 'util']
