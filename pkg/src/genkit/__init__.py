"""Desk-scale generative-audio algorithm engine.

Subpackages cover the shared schedules, masked generative decoding,
autoregressive assembly and sampling, diffusion and flow matching,
residual vector quantization, contrastive and combined losses, temporal
caption control, and trajectory recording/serving for the step explorer.
"""

__version__ = "0.1.0"
