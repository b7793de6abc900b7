"""Diffusion models of a fixed policy's successor state measure, trained
with a temporal-difference loss derived from the Bellman flow constraints,
plus exact dynamic-programming oracles for validation on tabular MDPs."""

__version__ = "0.1.0"

from . import approximator, bellman_loss, checkpoint, config, diffusion, \
    evaluation, mdp, oracle, replay, runner  # noqa: F401
