//! H/T/P/F metatile substitution for the hat monotile.
//!
//! The four metatiles carry hats at half scale (shortest hat edge 1/2). One
//! substitution step assembles a 29-tile patch from the current metatiles and
//! cuts four new, larger metatiles out of it. Child counts per step are
//! H → 3H+T+3P+3F, T → H, P → 2H+P+2F, F → 2H+P+3F.
//!
//! Transforms are evaluated in floating point and snapped to the lattice by
//! the caller, which verifies every hat lands on exact lattice positions.

use std::f64::consts::PI;
use std::sync::Arc;

const HR3: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Pt {
    pub x: f64,
    pub y: f64,
}

const fn pt(x: f64, y: f64) -> Pt {
    Pt { x, y }
}

fn hex_pt(x: f64, y: f64) -> Pt {
    pt(x + 0.5 * y, HR3 * y)
}

fn padd(a: Pt, b: Pt) -> Pt {
    pt(a.x + b.x, a.y + b.y)
}

fn psub(a: Pt, b: Pt) -> Pt {
    pt(a.x - b.x, a.y - b.y)
}

/// Affine map `[a, b, c, d, e, f]`: `x' = a x + b y + c`, `y' = d x + e y + f`.
pub(crate) type Affine = [f64; 6];

pub(crate) const IDENT: Affine = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];

fn mul(a: &Affine, b: &Affine) -> Affine {
    [
        a[0] * b[0] + a[1] * b[3],
        a[0] * b[1] + a[1] * b[4],
        a[0] * b[2] + a[1] * b[5] + a[2],
        a[3] * b[0] + a[4] * b[3],
        a[3] * b[1] + a[4] * b[4],
        a[3] * b[2] + a[4] * b[5] + a[5],
    ]
}

fn inv(t: &Affine) -> Affine {
    let det = t[0] * t[4] - t[1] * t[3];
    [
        t[4] / det,
        -t[1] / det,
        (t[1] * t[5] - t[2] * t[4]) / det,
        -t[3] / det,
        t[0] / det,
        (t[2] * t[3] - t[0] * t[5]) / det,
    ]
}

fn trans(tx: f64, ty: f64) -> Affine {
    [1.0, 0.0, tx, 0.0, 1.0, ty]
}

fn rot(ang: f64) -> Affine {
    let (s, c) = ang.sin_cos();
    [c, -s, 0.0, s, c, 0.0]
}

fn rot_about(p: Pt, ang: f64) -> Affine {
    mul(&trans(p.x, p.y), &mul(&rot(ang), &trans(-p.x, -p.y)))
}

pub(crate) fn apply(t: &Affine, p: Pt) -> Pt {
    pt(t[0] * p.x + t[1] * p.y + t[2], t[3] * p.x + t[4] * p.y + t[5])
}

/// Similarity taking `(0,0)` to `p` and `(1,0)` to `q`.
fn match_seg(p: Pt, q: Pt) -> Affine {
    [q.x - p.x, p.y - q.y, p.x, q.y - p.y, q.x - p.x, p.y]
}

/// Similarity taking `p1` to `p2` and `q1` to `q2`.
fn match_two(p1: Pt, q1: Pt, p2: Pt, q2: Pt) -> Affine {
    mul(&match_seg(p2, q2), &inv(&match_seg(p1, q1)))
}

fn intersect(p1: Pt, q1: Pt, p2: Pt, q2: Pt) -> Pt {
    let d = (q2.y - p2.y) * (q1.x - p1.x) - (q2.x - p2.x) * (q1.y - p1.y);
    let ua = ((q2.x - p2.x) * (p1.y - p2.y) - (q2.y - p2.y) * (p1.x - p2.x)) / d;
    pt(p1.x + ua * (q1.x - p1.x), p1.y + ua * (q1.y - p1.y))
}

/// Hat outline in unit hex-lattice coordinates (shortest edge 1).
pub(crate) fn hat_outline() -> [Pt; 13] {
    [
        hex_pt(0.0, 0.0),
        hex_pt(-1.0, -1.0),
        hex_pt(0.0, -2.0),
        hex_pt(2.0, -2.0),
        hex_pt(2.0, -1.0),
        hex_pt(4.0, -2.0),
        hex_pt(5.0, -1.0),
        hex_pt(4.0, 0.0),
        hex_pt(3.0, 0.0),
        hex_pt(2.0, 2.0),
        hex_pt(0.0, 3.0),
        hex_pt(0.0, 2.0),
        hex_pt(-1.0, 2.0),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetaKind {
    H,
    T,
    P,
    F,
}

#[derive(Debug)]
pub(crate) enum Node {
    Hat,
    Meta(Arc<MetaTile>),
}

#[derive(Debug)]
pub(crate) struct MetaTile {
    pub outline: Vec<Pt>,
    pub children: Vec<(Affine, Node)>,
}

impl MetaTile {
    fn child_outline(&self, n: usize) -> (&Affine, Vec<Pt>) {
        let (t, node) = &self.children[n];
        let shape = match node {
            Node::Hat => hat_outline().to_vec(),
            Node::Meta(m) => m.outline.clone(),
        };
        (t, shape)
    }

    fn eval_child(&self, n: usize, i: usize) -> Pt {
        let (t, shape) = self.child_outline(n);
        apply(t, shape[i])
    }

    fn recentre(&mut self) {
        let k = self.outline.len() as f64;
        let cx = self.outline.iter().map(|p| p.x).sum::<f64>() / k;
        let cy = self.outline.iter().map(|p| p.y).sum::<f64>() / k;
        for p in &mut self.outline {
            *p = pt(p.x - cx, p.y - cy);
        }
        let m = trans(-cx, -cy);
        for (t, _) in &mut self.children {
            *t = mul(&m, t);
        }
    }

    /// Number of hats below this tile.
    #[cfg(test)]
    pub fn hat_count(&self) -> usize {
        self.children
            .iter()
            .map(|(_, n)| match n {
                Node::Hat => 1,
                Node::Meta(m) => m.hat_count(),
            })
            .sum()
    }

    /// Push the placement of every hat below this tile.
    pub fn collect_hats(&self, parent: &Affine, out: &mut Vec<Affine>) {
        for (t, node) in &self.children {
            let m = mul(parent, t);
            match node {
                Node::Hat => out.push(m),
                Node::Meta(child) => child.collect_hats(&m, out),
            }
        }
    }
}

/// The four level-0 metatiles, in H, T, P, F order.
pub(crate) fn initial_metatiles() -> [Arc<MetaTile>; 4] {
    let hat = hat_outline();

    let h_outline =
        vec![pt(0.0, 0.0), pt(4.0, 0.0), pt(4.5, HR3), pt(2.5, 5.0 * HR3), pt(1.5, 5.0 * HR3), pt(-0.5, HR3)];
    let h_children = vec![
        (match_two(hat[5], hat[7], h_outline[5], h_outline[0]), Node::Hat),
        (match_two(hat[9], hat[11], h_outline[1], h_outline[2]), Node::Hat),
        (match_two(hat[5], hat[7], h_outline[3], h_outline[4]), Node::Hat),
        (mul(&trans(2.5, HR3), &mul(&[-0.5, -HR3, 0.0, HR3, -0.5, 0.0], &[0.5, 0.0, 0.0, 0.0, -0.5, 0.0])), Node::Hat),
    ];
    let h = MetaTile { outline: h_outline, children: h_children };

    let t = MetaTile {
        outline: vec![pt(0.0, 0.0), pt(3.0, 0.0), pt(1.5, 3.0 * HR3)],
        children: vec![([0.5, 0.0, 0.5, 0.0, 0.5, HR3], Node::Hat)],
    };

    let pair_children = || {
        vec![
            ([0.5, 0.0, 1.5, 0.0, 0.5, HR3], Node::Hat),
            (
                mul(&trans(0.0, 2.0 * HR3), &mul(&[0.5, HR3, 0.0, -HR3, 0.5, 0.0], &[0.5, 0.0, 0.0, 0.0, 0.5, 0.0])),
                Node::Hat,
            ),
        ]
    };
    let p = MetaTile {
        outline: vec![pt(0.0, 0.0), pt(4.0, 0.0), pt(3.0, 2.0 * HR3), pt(-1.0, 2.0 * HR3)],
        children: pair_children(),
    };
    let f = MetaTile {
        outline: vec![pt(0.0, 0.0), pt(3.0, 0.0), pt(3.5, HR3), pt(3.0, 2.0 * HR3), pt(-1.0, 2.0 * HR3)],
        children: pair_children(),
    };

    [Arc::new(h), Arc::new(t), Arc::new(p), Arc::new(f)]
}

enum Rule {
    Root(MetaKind),
    /// Attach `kind` edge `edge` to edge `side` of child `of`.
    Edge {
        of: usize,
        side: usize,
        kind: MetaKind,
        edge: usize,
    },
    /// Attach `kind` edge `edge` to the segment between two existing child vertices.
    Span {
        a: usize,
        ai: usize,
        b: usize,
        bi: usize,
        kind: MetaKind,
        edge: usize,
    },
}

fn patch_rules() -> Vec<Rule> {
    use MetaKind::*;
    let e = |of, side, kind, edge| Rule::Edge { of, side, kind, edge };
    vec![
        Rule::Root(H),
        e(0, 0, P, 2),
        e(1, 0, H, 2),
        e(2, 0, P, 2),
        e(3, 0, H, 2),
        e(4, 4, P, 2),
        e(0, 4, F, 3),
        e(2, 4, F, 3),
        Rule::Span { a: 4, ai: 1, b: 3, bi: 2, kind: F, edge: 0 },
        e(8, 3, H, 0),
        e(9, 2, P, 0),
        e(10, 2, H, 0),
        e(11, 4, P, 0),
        e(12, 2, H, 2),
        e(13, 0, F, 3),
        e(14, 2, F, 1),
        e(15, 3, H, 4),
        e(8, 2, F, 1),
        e(17, 3, H, 0),
        e(18, 2, P, 0),
        e(19, 2, H, 2),
        e(20, 4, F, 3),
        e(20, 0, P, 2),
        e(22, 0, H, 2),
        e(23, 4, F, 3),
        e(23, 0, F, 3),
        e(16, 0, P, 2),
        Rule::Span { a: 9, ai: 4, b: 0, bi: 2, kind: T, edge: 2 },
        e(4, 0, F, 3),
    ]
}

fn construct_patch(tiles: &[Arc<MetaTile>; 4]) -> MetaTile {
    let pick = |k: MetaKind| match k {
        MetaKind::H => tiles[0].clone(),
        MetaKind::T => tiles[1].clone(),
        MetaKind::P => tiles[2].clone(),
        MetaKind::F => tiles[3].clone(),
    };
    let mut patch = MetaTile { outline: Vec::new(), children: Vec::new() };
    for rule in patch_rules() {
        let (p, q, kind, edge) = match rule {
            Rule::Root(k) => {
                patch.children.push((IDENT, Node::Meta(pick(k))));
                continue;
            }
            Rule::Edge { of, side, kind, edge } => {
                let (t, poly) = patch.child_outline(of);
                let n = poly.len();
                (apply(t, poly[(side + 1) % n]), apply(t, poly[side]), kind, edge)
            }
            Rule::Span { a, ai, b, bi, kind, edge } => (patch.eval_child(b, bi), patch.eval_child(a, ai), kind, edge),
        };
        let shape = pick(kind);
        let n = shape.outline.len();
        let t = match_two(shape.outline[edge], shape.outline[(edge + 1) % n], p, q);
        patch.children.push((t, Node::Meta(shape)));
    }
    patch
}

fn adopt(patch: &MetaTile, outline: Vec<Pt>, picks: &[usize]) -> MetaTile {
    let children = picks
        .iter()
        .map(|&i| {
            let (t, node) = &patch.children[i];
            let node = match node {
                Node::Hat => Node::Hat,
                Node::Meta(m) => Node::Meta(m.clone()),
            };
            (*t, node)
        })
        .collect();
    let mut m = MetaTile { outline, children };
    m.recentre();
    m
}

fn construct_metatiles(patch: &MetaTile) -> [Arc<MetaTile>; 4] {
    let bps1 = patch.eval_child(8, 2);
    let bps2 = patch.eval_child(21, 2);
    let rbps = apply(&rot_about(bps1, -2.0 * PI / 3.0), bps2);

    let p72 = patch.eval_child(7, 2);
    let p252 = patch.eval_child(25, 2);

    let llc = intersect(bps1, rbps, patch.eval_child(6, 2), p72);
    let mut w = psub(patch.eval_child(6, 2), llc);

    let mut h_outline = vec![llc, bps1];
    w = apply(&rot(-PI / 3.0), w);
    h_outline.push(padd(h_outline[1], w));
    h_outline.push(patch.eval_child(14, 2));
    w = apply(&rot(-PI / 3.0), w);
    h_outline.push(psub(h_outline[3], w));
    h_outline.push(patch.eval_child(6, 2));

    let p_outline = vec![p72, padd(p72, psub(bps1, llc)), bps1, llc];
    let f_outline = vec![bps2, patch.eval_child(24, 2), patch.eval_child(25, 0), p252, padd(p252, psub(llc, bps1))];

    let aaa = h_outline[2];
    let bbb = padd(h_outline[1], psub(h_outline[4], h_outline[5]));
    let ccc = apply(&rot_about(bbb, -PI / 3.0), aaa);
    let t_outline = vec![bbb, ccc, aaa];

    let h = adopt(patch, h_outline, &[0, 9, 16, 27, 26, 6, 1, 8, 10, 15]);
    let p = adopt(patch, p_outline, &[7, 2, 3, 4, 28]);
    let f = adopt(patch, f_outline, &[21, 20, 22, 23, 24, 25]);
    let t = adopt(patch, t_outline, &[11]);
    [Arc::new(h), Arc::new(t), Arc::new(p), Arc::new(f)]
}

/// The H supertile after `level` substitutions (level 0 is the H metatile).
pub(crate) fn h_supertile(level: u32) -> Arc<MetaTile> {
    let mut tiles = initial_metatiles();
    for _ in 0..level {
        let patch = construct_patch(&tiles);
        tiles = construct_metatiles(&patch);
    }
    tiles[0].clone()
}

/// Hat count of the H supertile at `level`, from the substitution matrix.
pub fn h_supertile_hat_count(level: u32) -> u128 {
    // hats in (H, T, P, F)
    let mut c: [u128; 4] = [4, 1, 2, 2];
    for _ in 0..level {
        let [h, t, p, f] = c;
        c = [3 * h + t + 3 * p + 3 * f, h, 2 * h + p + 2 * f, 2 * h + p + 3 * f];
    }
    c[0]
}
