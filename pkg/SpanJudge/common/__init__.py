"""
Domain types shared by every other subpackage: tokens, entity mentions,
documents and corpora, plus the YAML-backed configuration.
"""

__all__ = ['config', 'corpus']
