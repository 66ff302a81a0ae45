use crate::graph::CsGraph;

/// Core numbers and onion layers of every vertex (unweighted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub core_number: Vec<u32>,
    /// 1-based peeling round of the onion decomposition.
    pub onion_layer: Vec<u32>,
    /// Core value that was current when each onion layer was peeled,
    /// indexed by `layer - 1`.
    pub layer_core: Vec<u32>,
}

pub fn core_decomposition(g: &CsGraph) -> Decomposition {
    let core_number = core_numbers(g);
    let (onion_layer, layer_core) = onion_decomposition(g);
    debug_assert!((0..g.num_vertices())
        .all(|v| layer_core[onion_layer[v] as usize - 1] == core_number[v]));
    Decomposition {
        core_number,
        onion_layer,
        layer_core,
    }
}

/// Batagelj–Zaversnik bucket peeling, O(n + m).
pub fn core_numbers(g: &CsGraph) -> Vec<u32> {
    let n = g.num_vertices();
    let mut deg: Vec<usize> = (0..n).map(|v| g.num_neighbors(v)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);

    // bin[d] = first position of degree-d vertices in `vert`.
    let mut bin = vec![0usize; max_deg + 1];
    for &d in &deg {
        bin[d] += 1;
    }
    let mut start = 0;
    for b in bin.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut pos = vec![0usize; n];
    let mut vert = vec![0usize; n];
    for v in 0..n {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        bin[deg[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = vert[i];
        for &u in g.neighbors(v) {
            let u = u as usize;
            if deg[u] > deg[v] {
                let du = deg[u];
                let pu = pos[u];
                let pw = bin[du];
                let w = vert[pw];
                if u != w {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                bin[du] += 1;
                deg[u] -= 1;
            }
        }
    }
    deg.into_iter().map(|d| d as u32).collect()
}

/// Onion decomposition.
///
/// Each round removes, simultaneously, every remaining vertex whose current
/// degree is at most the current core value; when no such vertex is left the
/// core value rises to the minimum remaining degree. Returns the 1-based
/// layer of each vertex and the core value of each layer.
pub fn onion_decomposition(g: &CsGraph) -> (Vec<u32>, Vec<u32>) {
    let n = g.num_vertices();
    let mut deg: Vec<usize> = (0..n).map(|v| g.num_neighbors(v)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_deg + 1];
    for v in (0..n).rev() {
        buckets[deg[v]].push(v);
    }
    let mut removed = vec![false; n];
    let mut queued = vec![false; n];
    let mut layer = vec![0u32; n];
    let mut layer_core = Vec::new();
    let mut remaining = n;
    let mut core = 0usize;
    let mut scan = 0usize;
    let mut current: Vec<usize> = Vec::new();

    while remaining > 0 {
        if current.is_empty() {
            // Every remaining vertex has degree > core here.
            'search: while scan <= max_deg {
                while let Some(&v) = buckets[scan].last() {
                    if removed[v] || queued[v] || deg[v] != scan {
                        buckets[scan].pop();
                    } else {
                        break 'search;
                    }
                }
                scan += 1;
            }
            core = core.max(scan);
            for v in std::mem::take(&mut buckets[scan]) {
                if !removed[v] && !queued[v] && deg[v] == scan {
                    queued[v] = true;
                    current.push(v);
                }
            }
        }
        layer_core.push(core as u32);
        let layer_no = layer_core.len() as u32;
        for &v in &current {
            removed[v] = true;
            layer[v] = layer_no;
        }
        remaining -= current.len();
        let mut next = Vec::new();
        for &v in &current {
            for &u in g.neighbors(v) {
                let u = u as usize;
                if removed[u] {
                    continue;
                }
                deg[u] -= 1;
                if queued[u] {
                    continue;
                }
                if deg[u] <= core {
                    queued[u] = true;
                    next.push(u);
                } else {
                    buckets[deg[u]].push(u);
                }
            }
        }
        current = next;
        // Degrees may have dropped below the scan pointer; it never needs to
        // go below core + 1 because lower-degree vertices get queued.
        scan = scan.min(core + 1);
    }
    (layer, layer_core)
}
