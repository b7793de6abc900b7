"""Exact successor state measures on a gridworld, three ways.

Computes d^pi(x | s, a, n) -- the average distribution over the states
visited in the next n steps -- by dynamic programming, by an independent
uniform-average-of-matrix-powers calculation, and by Monte Carlo rollouts,
then prints them side by side for one condition.

Usage:
    python3 demos/oracle_gridworld.py [--width 5] [--height 5] [--n 8]
"""

import argparse

import numpy as np

from ssm_diffusion import mdp as m
from ssm_diffusion import oracle as orc


def print_grid(label, pmf, width, height):
    print(f"  {label}:")
    for row in range(height):
        cells = " ".join(f"{pmf[row * width + c]:.3f}" for c in range(width))
        print(f"    {cells}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--width", type=int, default=5)
    parser.add_argument("--height", type=int, default=5)
    parser.add_argument("--p-move", type=float, default=0.8)
    parser.add_argument("--n", type=int, default=8)
    parser.add_argument("--state", type=int, default=0)
    parser.add_argument("--rollouts", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    goal = (args.width - 1, args.height - 1)
    mdp = m.gridworld_new(args.width, args.height, p_move=args.p_move,
                          horizon=args.n,
                          reward=m.goal_reward(args.width, args.height, goal))
    policy = m.policy_toward_goal(mdp, goal)
    s = args.state
    a = int(policy.table[s])
    print(f"{args.width}x{args.height} grid, p_move={args.p_move}, "
          f"policy: toward {goal}, condition (s={s}, a={a}, n={args.n})\n")

    dp = orc.exact_ssm(mdp, policy, args.n)
    mp = orc.ssm_matrix_power(mdp, policy, args.n)
    max_err = np.max(np.abs(dp.d - mp.d))
    print(f"dynamic programming vs matrix powers, all conditions: "
          f"max abs difference {max_err:.2e}")

    rng = np.random.default_rng(args.seed)
    mc = orc.mc_ssm(mdp, policy, s, a, args.n, args.rollouts, rng)
    tv = 0.5 * np.abs(mc - dp.d[s, a, args.n - 1]).sum()
    print(f"Monte Carlo ({args.rollouts} rollouts) vs exact at (s, a, n): "
          f"TV {tv:.4f}\n")

    print_grid("exact d^pi", dp.d[s, a, args.n - 1], args.width, args.height)
    print_grid("Monte Carlo", mc, args.width, args.height)

    q = orc.exact_q(dp, mdp)
    print(f"\nexact Q(s={s}, a={a}, n={args.n}) with the goal-cell "
          f"indicator reward: {q[s, a, args.n - 1]:.4f}")


if __name__ == "__main__":
    main()
