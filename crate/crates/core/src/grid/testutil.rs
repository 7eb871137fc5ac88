//! Small hand-built networks for unit tests.

use super::*;

fn bus(id: usize, bus_type: BusType) -> Bus {
    Bus {
        id,
        bus_type,
        vm: 1.0,
        va: 0.0,
        base_kv: 230.0,
        vmin: 0.9,
        vmax: 1.1,
        in_service: true,
        damaged: false,
    }
}

pub fn branch(id: usize, f_bus: usize, t_bus: usize, x: f64, rate_a: f64) -> Branch {
    Branch {
        id,
        f_bus,
        t_bus,
        r: 0.0,
        x,
        b_charge: 0.0,
        rate_a,
        tap: 1.0,
        shift: 0.0,
        angmin: -std::f64::consts::PI / 6.0,
        angmax: std::f64::consts::PI / 6.0,
        in_service: true,
        damaged: false,
    }
}

pub fn gen(id: usize, bus: usize, pmax: f64) -> Generator {
    Generator {
        id,
        bus,
        pg: 0.0,
        qg: 0.0,
        pmin: 0.0,
        pmax,
        qmin: -pmax,
        qmax: pmax,
        vg: 1.0,
        in_service: true,
        damaged: false,
    }
}

pub fn three_bus() -> Network {
    let mut net = Network::empty("three", 100.0);
    net.buses.insert(1, bus(1, BusType::Ref));
    net.buses.insert(2, bus(2, BusType::Pq));
    net.buses.insert(3, bus(3, BusType::Pq));
    net.branches.insert(1, branch(1, 1, 2, 0.1, 1.0));
    net.branches.insert(2, branch(2, 2, 3, 0.1, 1.0));
    net.branches.insert(3, branch(3, 1, 3, 0.1, 0.0));
    net.gens.insert(1, gen(1, 1, 2.0));
    net.loads.insert(
        1,
        Load {
            id: 1,
            bus: 2,
            pd: 0.4,
            qd: 0.1,
        },
    );
    net.loads.insert(
        2,
        Load {
            id: 2,
            bus: 3,
            pd: 0.3,
            qd: 0.0,
        },
    );
    net.ref_buses.insert(1);
    net
}

pub fn five_bus_ring() -> Network {
    let mut net = Network::empty("ring5", 100.0);
    net.buses.insert(1, bus(1, BusType::Ref));
    for i in 2..=5 {
        net.buses.insert(i, bus(i, BusType::Pq));
    }
    let edges = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (1, 3), (2, 4)];
    for (k, (f, t)) in edges.iter().enumerate() {
        net.branches.insert(k + 1, branch(k + 1, *f, *t, 0.1, 2.0));
    }
    net.gens.insert(1, gen(1, 1, 3.0));
    net.gens.insert(2, gen(2, 4, 1.0));
    for (i, b) in [2, 3, 5].iter().enumerate() {
        net.loads.insert(
            i + 1,
            Load {
                id: i + 1,
                bus: *b,
                pd: 0.5,
                qd: 0.1,
            },
        );
    }
    net.ref_buses.insert(1);
    net
}

/// Generator at bus 1, 1 pu load at bus 2, `n` parallel 0.6 pu branches.
pub fn n_parallel_branches(n: usize) -> Network {
    let mut net = Network::empty("parallel", 100.0);
    net.buses.insert(1, bus(1, BusType::Ref));
    net.buses.insert(2, bus(2, BusType::Pq));
    for k in 1..=n {
        net.branches.insert(k, branch(k, 1, 2, 0.1, 0.6));
    }
    net.gens.insert(1, gen(1, 1, 2.0));
    net.loads.insert(
        1,
        Load {
            id: 1,
            bus: 2,
            pd: 1.0,
            qd: 0.0,
        },
    );
    net.ref_buses.insert(1);
    net
}
