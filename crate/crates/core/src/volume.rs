//! Dense `frames × rows × cols` sample volumes.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub const fn new(t: usize, h: usize, w: usize) -> Self {
        Dims { t, h, w }
    }

    pub const fn len(&self) -> usize {
        self.t * self.h * self.w
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.t, self.h, self.w]
    }

    pub fn from_array(a: [usize; 3]) -> Self {
        Dims::new(a[0], a[1], a[2])
    }

    pub fn is_pow2(&self) -> bool {
        self.as_array().iter().all(|d| d.is_power_of_two())
    }

    /// Every axis rounded up to the next power of two.
    pub fn next_pow2(&self) -> Self {
        Dims::from_array(self.as_array().map(usize::next_power_of_two))
    }

    #[inline]
    pub fn index(&self, t: usize, y: usize, x: usize) -> usize {
        (t * self.h + y) * self.w + x
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Volume<T> {
    dims: Dims,
    data: Vec<T>,
}

impl<T: Copy> Volume<T> {
    pub fn filled(dims: Dims, value: T) -> Self {
        Volume {
            dims,
            data: vec![value; dims.len()],
        }
    }

    /// `None` when `data.len()` does not match `dims`.
    pub fn from_vec(dims: Dims, data: Vec<T>) -> Option<Self> {
        (data.len() == dims.len()).then_some(Volume { dims, data })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dims.len());
        for t in 0..dims.t {
            for y in 0..dims.h {
                for x in 0..dims.w {
                    data.push(f(t, y, x));
                }
            }
        }
        Volume { dims, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, t: usize, y: usize, x: usize) -> T {
        self.data[self.dims.index(t, y, x)]
    }

    #[inline]
    pub fn set(&mut self, t: usize, y: usize, x: usize, v: T) {
        let i = self.dims.index(t, y, x);
        self.data[i] = v;
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> Volume<U> {
        Volume {
            dims: self.dims,
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    /// Copy of the box starting at `origin` with extent `dims`.
    pub fn extract(&self, origin: [usize; 3], dims: Dims) -> Volume<T> {
        Volume::from_fn(dims, |t, y, x| {
            self.get(origin[0] + t, origin[1] + y, origin[2] + x)
        })
    }

    pub fn insert(&mut self, origin: [usize; 3], block: &Volume<T>) {
        let d = block.dims;
        for t in 0..d.t {
            for y in 0..d.h {
                for x in 0..d.w {
                    self.set(
                        origin[0] + t,
                        origin[1] + y,
                        origin[2] + x,
                        block.get(t, y, x),
                    );
                }
            }
        }
    }
}

/// 8-bit luma group of frames.
pub type GroupOfFrames = Volume<u8>;

/// Whole-sample symmetric extension (`... c b | a b c | c b ...` mirrored
/// including the edge sample) of `src` up to `dims`.
pub fn pad_symmetric<T: Copy>(src: &Volume<T>, dims: Dims) -> Volume<T> {
    let s = src.dims();
    let mirror = |i: usize, n: usize| -> usize {
        let period = 2 * n;
        let r = i % period;
        if r < n {
            r
        } else {
            period - 1 - r
        }
    };
    Volume::from_fn(dims, |t, y, x| {
        src.get(mirror(t, s.t), mirror(y, s.h), mirror(x, s.w))
    })
}
