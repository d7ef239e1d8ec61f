"""Truncated multivariate Taylor jets (forward mode, order <= 2).

A jet carries a batch of tensor values together with their first and second
partial derivatives with respect to ``m`` base variables.  Shapes are

    v  : (N, *S)
    d1 : (N, *S, m)        or None for an order-0 jet
    d2 : (N, *S, m, m)     or None for an order <= 1 jet

where ``N`` is the batch (sample point) axis and ``S`` the tensor shape.
Derivative axes are always trailing, so indexing and permutations of the
value axes act on all three arrays in the same way.
"""

import numpy as np

# letters reserved for derivative axes inside einsum specs
_DA, _DB = "Y", "Z"


class Jet:
    __slots__ = ("v", "d1", "d2")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, v, d1=None, d2=None):
        self.v = np.asarray(v, dtype=float)
        self.d1 = d1
        self.d2 = d2 if d1 is not None else None

    # -- construction -----------------------------------------------------

    @classmethod
    def variable(cls, values, index, nvars, order=2):
        """Jet of the base variable number ``index`` sampled at ``values``."""
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        d1 = d2 = None
        if order >= 1:
            d1 = np.zeros((n, nvars))
            d1[:, index] = 1.0
        if order >= 2:
            d2 = np.zeros((n, nvars, nvars))
        return cls(values, d1, d2)

    @classmethod
    def constant(cls, value, shape, nvars, order=2):
        v = np.broadcast_to(np.asarray(value, dtype=float), shape).copy()
        d1 = np.zeros(shape + (nvars,)) if order >= 1 else None
        d2 = np.zeros(shape + (nvars, nvars)) if order >= 2 else None
        return cls(v, d1, d2)

    # -- bookkeeping ------------------------------------------------------

    @property
    def order(self):
        if self.d1 is None:
            return 0
        return 1 if self.d2 is None else 2

    @property
    def nvars(self):
        return None if self.d1 is None else self.d1.shape[-1]

    @property
    def shape(self):
        return self.v.shape

    def truncate(self, order):
        if order >= self.order:
            return self
        return Jet(self.v, self.d1 if order >= 1 else None, None)

    def restrict(self, idx):
        """Keep only the derivative variables listed in ``idx``."""
        idx = list(idx)
        d1 = None if self.d1 is None else self.d1[..., idx]
        d2 = None if self.d2 is None else self.d2[..., idx, :][..., idx]
        return Jet(self.v, d1, d2)

    def deriv(self):
        """Gradient as a jet one order lower; derivative index appended."""
        if self.d1 is None:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet(self.d1, self.d2, None)

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        if any(k is Ellipsis for k in key):
            raise IndexError("ellipsis indexing is not supported on jets")
        d1 = None if self.d1 is None else self.d1[key]
        d2 = None if self.d2 is None else self.d2[key]
        return Jet(self.v[key], d1, d2)

    def permute(self, *axes):
        """Permute value axes (batch axis must stay first)."""
        k = self.v.ndim
        d1 = None if self.d1 is None else self.d1.transpose(*axes, k)
        d2 = None if self.d2 is None else self.d2.transpose(*axes, k, k + 1)
        return Jet(self.v.transpose(*axes), d1, d2)

    def __repr__(self):
        return f"Jet(shape={self.v.shape}, order={self.order})"

    # -- arithmetic -------------------------------------------------------

    def __neg__(self):
        return Jet(-self.v, _neg(self.d1), _neg(self.d2))

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            a, b = self.truncate(order), other.truncate(order)
            return Jet(a.v + b.v, _add(a.d1, b.d1), _add(a.d2, b.d2))
        other = np.asarray(other, dtype=float)
        return Jet(self.v + other, self.d1, self.d2)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return Jet(self.v * c, _scale(self.d1, c, 1), _scale(self.d2, c, 2))
        order = min(self.order, other.order)
        a, b = self.truncate(order), other.truncate(order)
        v = a.v * b.v
        d1 = d2 = None
        if order >= 1:
            d1 = a.d1 * b.v[..., None] + a.v[..., None] * b.d1
        if order >= 2:
            d2 = (a.d2 * b.v[..., None, None] + a.v[..., None, None] * b.d2
                  + a.d1[..., :, None] * b.d1[..., None, :]
                  + b.d1[..., :, None] * a.d1[..., None, :])
        return Jet(v, d1, d2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, other):
        if isinstance(other, Jet):
            return exp(other * log(self))
        c = float(other)
        if c == 0.0:
            return Jet.constant(1.0, self.v.shape, self.nvars or 0, self.order)
        v = self.v
        if c == int(c) and c >= 0:
            k = int(c)
            f0 = v ** k
            f1 = k * v ** (k - 1) if k >= 1 else np.zeros_like(v)
            f2 = k * (k - 1) * v ** (k - 2) if k >= 2 else np.zeros_like(v)
        else:
            f0 = v ** c
            f1 = c * v ** (c - 1)
            f2 = c * (c - 1) * v ** (c - 2)
        return self.chain(f0, f1, f2)

    def __rpow__(self, other):
        return exp(self * np.log(float(other)))

    # -- elementwise chain rule -------------------------------------------

    def chain(self, f0, f1, f2):
        """Compose with a scalar function given its value and derivatives."""
        d1 = d2 = None
        if self.d1 is not None:
            d1 = f1[..., None] * self.d1
        if self.d2 is not None:
            d2 = (f2[..., None, None] * self.d1[..., :, None] * self.d1[..., None, :]
                  + f1[..., None, None] * self.d2)
        return Jet(f0, d1, d2)


def _neg(a):
    return None if a is None else -a


def _add(a, b):
    if a is None or b is None:
        return None
    return a + b


def _scale(a, c, k):
    if a is None:
        return None
    return a * c.reshape(c.shape + (1,) * k) if c.ndim else a * c


def value(x):
    return x.v if isinstance(x, Jet) else np.asarray(x, dtype=float)


def reciprocal(a):
    if not isinstance(a, Jet):
        return 1.0 / np.asarray(a, dtype=float)
    v = a.v
    return a.chain(1.0 / v, -1.0 / v ** 2, 2.0 / v ** 3)


def sin(a):
    if not isinstance(a, Jet):
        return np.sin(a)
    s, c = np.sin(a.v), np.cos(a.v)
    return a.chain(s, c, -s)


def cos(a):
    if not isinstance(a, Jet):
        return np.cos(a)
    s, c = np.sin(a.v), np.cos(a.v)
    return a.chain(c, -s, -c)


def exp(a):
    if not isinstance(a, Jet):
        return np.exp(a)
    e = np.exp(a.v)
    return a.chain(e, e, e)


def log(a):
    if not isinstance(a, Jet):
        return np.log(a)
    v = a.v
    return a.chain(np.log(v), 1.0 / v, -1.0 / v ** 2)


def sqrt(a):
    if not isinstance(a, Jet):
        return np.sqrt(a)
    r = np.sqrt(a.v)
    return a.chain(r, 0.5 / r, -0.25 / (r * a.v))


# -- tensor algebra on jets ------------------------------------------------

def contract(spec, a, b):
    """Two-operand einsum evaluated as one batched matrix product.

    Equivalent to ``np.einsum(spec, a, b)`` for specs without repeated
    letters inside an operand; much faster for the small batched tensors
    used here.
    """
    lhs, out = spec.split("->")
    sa, sb = lhs.split(",")
    if len(set(sa)) != len(sa) or len(set(sb)) != len(sb):
        return np.einsum(spec, a, b)
    batch = [c for c in out if c in sa and c in sb]
    con = [c for c in sa if c in sb and c not in out]
    fa = [c for c in sa if c not in sb]
    fb = [c for c in sb if c not in sa]
    if any(c not in out for c in fa + fb):
        return np.einsum(spec, a, b)
    dims = {}
    for s_, arr in ((sa, a), (sb, b)):
        for c, n in zip(s_, arr.shape):
            dims[c] = n
    size = lambda cs: int(np.prod([dims[c] for c in cs])) if cs else 1
    A = np.transpose(a, [sa.index(c) for c in batch + fa + con])
    B = np.transpose(b, [sb.index(c) for c in batch + con + fb])
    A = A.reshape(size(batch), size(fa), size(con))
    B = B.reshape(size(batch), size(con), size(fb))
    R = np.matmul(A, B).reshape([dims[c] for c in batch + fa + fb])
    order = batch + fa + fb
    return np.transpose(R, [order.index(c) for c in out])


def _spec_parts(spec):
    lhs, out = spec.split("->")
    a, b = lhs.split(",")
    return a, b, out


def einsum(spec, a, b):
    """Two-operand einsum with the product rule applied to derivatives.

    Operands may be jets or plain arrays (treated as exact constants).
    """
    sa, sb, so = _spec_parts(spec)
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return contract(spec, a, b)
    if not isinstance(b, Jet):
        return _einsum_const(sa, sb, so, a, np.asarray(b, dtype=float), first=True)
    if not isinstance(a, Jet):
        return _einsum_const(sa, sb, so, b, np.asarray(a, dtype=float), first=False)
    order = min(a.order, b.order)
    a, b = a.truncate(order), b.truncate(order)
    v = contract(spec, a.v, b.v)
    d1 = d2 = None
    Y, Z = _DA, _DB
    if order >= 1:
        d1 = (contract(f"{sa}{Y},{sb}->{so}{Y}", a.d1, b.v)
              + contract(f"{sa},{sb}{Y}->{so}{Y}", a.v, b.d1))
    if order >= 2:
        d2 = (contract(f"{sa}{Y}{Z},{sb}->{so}{Y}{Z}", a.d2, b.v)
              + contract(f"{sa},{sb}{Y}{Z}->{so}{Y}{Z}", a.v, b.d2)
              + contract(f"{sa}{Y},{sb}{Z}->{so}{Y}{Z}", a.d1, b.d1)
              + contract(f"{sa}{Z},{sb}{Y}->{so}{Y}{Z}", a.d1, b.d1))
    return Jet(v, d1, d2)


def _einsum_const(sa, sb, so, jet, const, first):
    Y, Z = _DA, _DB
    sj, sc = (sa, sb) if first else (sb, sa)

    def spec(suffix):
        if first:
            return f"{sj}{suffix},{sc}->{so}{suffix}"
        return f"{sc},{sj}{suffix}->{so}{suffix}"

    def call(s, arr):
        return contract(s, arr, const) if first else contract(s, const, arr)

    v = call(spec(""), jet.v)
    d1 = None if jet.d1 is None else call(spec(Y), jet.d1)
    d2 = None if jet.d2 is None else call(spec(Y + Z), jet.d2)
    return Jet(v, d1, d2)


def inv(a):
    """Batched matrix inverse of a jet with value shape (N, k, k)."""
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    ai = np.linalg.inv(a.v)
    d1 = d2 = None
    if a.d1 is not None:
        # d(A^-1) = -A^-1 dA A^-1
        t = contract("nij,njkY->nikY", ai, a.d1)
        d1 = -contract("nikY,nkl->nilY", t, ai)
    if a.d2 is not None:
        # second derivative: A^-1 (dA_y A^-1 dA_z + dA_z A^-1 dA_y - d2A) A^-1
        u = contract("nikY,nklZ->nilYZ", t, t)
        w = u + u.transpose(0, 1, 2, 4, 3)
        w = w - contract("nij,njkYZ->nikYZ", ai, a.d2)
        d2 = contract("nikYZ,nkl->nilYZ", w, ai)
    return Jet(ai, d1, d2)


def stack(items, axis):
    """Stack jets (or arrays) along a new value axis; axis >= 1."""
    if axis < 1:
        raise ValueError("the batch axis must stay first")
    jets = [x for x in items if isinstance(x, Jet)]
    if not jets:
        return np.stack([np.asarray(x, dtype=float) for x in items], axis=axis)
    order = min(j.order for j in jets)
    ref = jets[0]
    nv = ref.nvars

    def as_jet(x):
        if isinstance(x, Jet):
            return x.truncate(order)
        return Jet.constant(x, ref.v.shape, nv or 0, order)

    js = [as_jet(x) for x in items]
    v = np.stack([j.v for j in js], axis=axis)
    d1 = None if order < 1 else np.stack([j.d1 for j in js], axis=axis)
    d2 = None if order < 2 else np.stack([j.d2 for j in js], axis=axis)
    return Jet(v, d1, d2)


def broadcast_scalar(x, n, nvars, order):
    """Return ``x`` as a scalar jet over a batch of ``n`` points."""
    if isinstance(x, Jet):
        if x.v.shape == (n,):
            return x
        v = np.broadcast_to(x.v, (n,)).copy()
        d1 = None if x.d1 is None else np.broadcast_to(x.d1, (n, x.d1.shape[-1])).copy()
        d2 = None if x.d2 is None else np.broadcast_to(x.d2, (n,) + x.d2.shape[-2:]).copy()
        return Jet(v, d1, d2)
    return Jet.constant(x, (n,), nvars, order)
