"""mixlab: data-mixture optimization for RL post-training with verifiable rewards.

Fits surrogate models mapping mixture weights to post-training performance,
computes heuristic and model-based optimal mixtures, and validates the whole
loop with a desk-scale GRPO trainer on a synthetic multi-domain world.
"""

__version__ = "0.1.0"
