//! Square observation window, boundary-aware distances and a bucket grid
//! for nearest-point queries.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }
}

/// How the edges of the square window are treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    /// Opposite edges are identified; distances wrap around.
    Torus,
    /// Plain Euclidean distances; only points at least `width` km from every
    /// edge are measured.
    GuardZone { width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub side: f64,
    pub boundary: Boundary,
}

impl Window {
    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    #[inline]
    pub fn distance2(&self, a: Point, b: Point) -> f64 {
        let mut dx = (a.x - b.x).abs();
        let mut dy = (a.y - b.y).abs();
        if self.boundary == Boundary::Torus {
            dx = dx.min(self.side - dx);
            dy = dy.min(self.side - dy);
        }
        dx * dx + dy * dy
    }

    /// Whether `p` may be used as a measurement point.
    pub fn is_interior(&self, p: Point) -> bool {
        match self.boundary {
            Boundary::Torus => true,
            Boundary::GuardZone { width } => {
                p.x >= width && p.y >= width && self.side - p.x >= width && self.side - p.y >= width
            }
        }
    }
}

/// Points bucketed into an `n x n` grid of square cells (CSR layout).
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    window: Window,
    cells_per_side: usize,
    cell: f64,
    starts: Vec<u32>,
    members: Vec<u32>,
    points: Vec<Point>,
}

impl SpatialGrid {
    pub fn new(window: Window, points: &[Point]) -> SpatialGrid {
        let n = ((points.len() as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 1024);
        let cell = window.side / n as f64;
        let mut counts = vec![0u32; n * n + 1];
        let cell_ids: Vec<usize> = points
            .iter()
            .map(|p| {
                let id = Self::cell_of(p, cell, n);
                counts[id + 1] += 1;
                id
            })
            .collect();
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut members = vec![0u32; points.len()];
        for (idx, &id) in cell_ids.iter().enumerate() {
            members[fill[id] as usize] = idx as u32;
            fill[id] += 1;
        }
        SpatialGrid {
            window,
            cells_per_side: n,
            cell,
            starts: counts,
            members,
            points: points.to_vec(),
        }
    }

    fn cell_of(p: &Point, cell: f64, n: usize) -> usize {
        let cx = ((p.x / cell) as usize).min(n - 1);
        let cy = ((p.y / cell) as usize).min(n - 1);
        cy * n + cx
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the point closest to `q`.
    pub fn nearest(&self, q: Point) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let n = self.cells_per_side as i64;
        let wrap = self.window.boundary == Boundary::Torus;
        let cx = ((q.x / self.cell) as i64).clamp(0, n - 1);
        let cy = ((q.y / self.cell) as i64).clamp(0, n - 1);
        let mut best: Option<(usize, f64)> = None;
        let mut r = 0i64;
        loop {
            if 2 * r + 1 >= n {
                return self.brute_force(q);
            }
            for dy in -r..=r {
                let edge_row = dy.abs() == r;
                let mut dx = -r;
                while dx <= r {
                    let (mut x, mut y) = (cx + dx, cy + dy);
                    let inside = (0..n).contains(&x) && (0..n).contains(&y);
                    if wrap {
                        x = x.rem_euclid(n);
                        y = y.rem_euclid(n);
                    }
                    if wrap || inside {
                        self.scan_cell((y * n + x) as usize, q, &mut best);
                    }
                    // interior rows only touch the two ring columns
                    dx += if edge_row { 1 } else { 2 * r.max(1) };
                }
            }
            let reach = r as f64 * self.cell;
            if let Some((_, d2)) = best {
                if d2 <= reach * reach {
                    return best;
                }
            }
            r += 1;
        }
    }

    fn scan_cell(&self, id: usize, q: Point, best: &mut Option<(usize, f64)>) {
        let (lo, hi) = (self.starts[id] as usize, self.starts[id + 1] as usize);
        for &m in &self.members[lo..hi] {
            let d2 = self.window.distance2(q, self.points[m as usize]);
            if best.is_none_or(|(_, b)| d2 < b) {
                *best = Some((m as usize, d2));
            }
        }
    }

    fn brute_force(&self, q: Point) -> Option<(usize, f64)> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| (i, self.window.distance2(q, *p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}
