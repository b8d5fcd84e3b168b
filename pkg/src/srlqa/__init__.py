"""Fill-in-the-phrase query generation from role-labeled video descriptions
and relative/contrastive scoring of free-form answer phrases."""

__version__ = "0.1.0"
