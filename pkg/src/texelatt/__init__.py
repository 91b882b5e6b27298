"""Element-based texture description and retrieval toolkit.

Pipeline stages: procedural texture synthesis with texel ground truth,
texel detection, 36-dimensional attribute descriptors, distortion
simulation, and CMC/AUC retrieval evaluation with a Tamura baseline.
"""

__version__ = "0.1.0"
