"""promptmap: a prompt-engineering workbench for text-to-image generation.

Retrieves similar prior creations from a prompt-image corpus, co-embeds
them with freshly generated images, mines cluster-level prompt keywords,
rates images against opposing-keyword criteria, and serves everything to
an interactive client.
"""

__version__ = "0.1.0"
