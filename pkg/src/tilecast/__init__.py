"""tilecast: tiled 360-degree video multicast over a massive MIMO downlink.

Desk-scale simulator and optimizer: seeded single-cell scenarios, viewport
tile sets and lattice decomposition, multi-lattice multi-stream grouping,
closed-form MRT/ZF link rates with max-min fairness, a Monte Carlo validation
oracle, and the average-QoE optimizer with relax-and-recover.
"""

__version__ = "0.1.0"
