# %% [markdown]
# Numeric kernels
# ---------------
# The networks are built from a handful of numpy primitives. This walks
# through the 1-D convolution and checks its backward pass numerically.

# %%
import numpy as np

from senn.numkernel import SeededRng, conv1d_backward, conv1d_forward, softmax

# a length-3 signal and an edge-detecting kernel: out = x[0] - x[2]
x = np.array([[1.0], [2.0], [3.0]])
kernel = np.array([[[1.0], [0.0], [-1.0]]])  # (filters, width, channels)
print("conv1d:", conv1d_forward(x, kernel, np.zeros(1)).ravel())

# %%
# softmax is shift invariant, so huge logits are fine
print("softmax:", softmax(np.array([[0.0, np.log(3.0)], [1000.0, 1000.0 + np.log(3.0)]])))

# %%
# gradient of sum(upstream * conv(x)) w.r.t. the kernel, against central differences
rng = SeededRng(0)
x = rng.normal(10).reshape(5, 2)
k = rng.normal(12).reshape(2, 3, 2)
b = np.zeros(2)
up = rng.normal(6).reshape(3, 2)
_, gk, _ = conv1d_backward(x, k, up)

eps = 1e-5
numeric = np.zeros_like(k)
for idx in np.ndindex(k.shape):
    kp, km = k.copy(), k.copy()
    kp[idx] += eps
    km[idx] -= eps
    numeric[idx] = (np.sum(up * conv1d_forward(x, kp, b)) - np.sum(up * conv1d_forward(x, km, b))) / (2 * eps)
print("max |analytic - numeric|:", np.abs(gk - numeric).max())
