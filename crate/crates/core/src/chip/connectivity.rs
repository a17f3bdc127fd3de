//! Synapse array layout and event routing tables.

use alloc::vec;
use alloc::vec::Vec;

use super::ChipError;

/// Lowest and highest static weight levels. Static weights are signed
/// integer levels; negative levels target the inhibitory synapse DPI.
pub const MIN_LEVEL: i8 = -3;
pub const MAX_LEVEL: i8 = 3;

/// A synapse column on a neuron: the fixed-weight half or the plastic half.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Column {
    Static(u16),
    Plastic(u16),
}

/// One routing target: a synapse column on a neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Target {
    pub neuron: u16,
    pub column: Column,
}

/// The chip's synapse array: per-neuron static weight levels, the plastic
/// state matrix X, and the routing tables that deliver input events and
/// recurrent spikes to columns.
#[derive(Clone, Debug)]
pub struct ConnectivityMatrix {
    n_neurons: usize,
    n_static: usize,
    n_plastic: usize,
    /// Static weight levels, row-major `[neuron][column]`.
    static_weights: Vec<i8>,
    /// Plastic state X in [0, 1], row-major `[neuron][column]`.
    plastic_x: Vec<f64>,
    plastic_enabled: Vec<bool>,
    /// Enabled plastic synapses as flat indices, for the drift sweep.
    enabled_list: Vec<u32>,
    /// Next free column per neuron, used by the `connect_*` builders.
    static_cursor: Vec<u16>,
    plastic_cursor: Vec<u16>,
    /// input address -> targets
    input_routing: Vec<Vec<Target>>,
    /// source neuron -> targets (recurrent connections)
    recurrent_routing: Vec<Vec<Target>>,
}

impl ConnectivityMatrix {
    pub fn new(n_neurons: usize, n_static: usize, n_plastic: usize, n_inputs: usize) -> Self {
        Self {
            n_neurons,
            n_static,
            n_plastic,
            static_weights: vec![0; n_neurons * n_static],
            plastic_x: vec![0.0; n_neurons * n_plastic],
            plastic_enabled: vec![false; n_neurons * n_plastic],
            enabled_list: Vec::new(),
            static_cursor: vec![0; n_neurons],
            plastic_cursor: vec![0; n_neurons],
            input_routing: vec![Vec::new(); n_inputs],
            recurrent_routing: vec![Vec::new(); n_neurons],
        }
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }
    pub fn n_static(&self) -> usize {
        self.n_static
    }
    pub fn n_plastic(&self) -> usize {
        self.n_plastic
    }
    pub fn n_inputs(&self) -> usize {
        self.input_routing.len()
    }

    fn check_neuron(&self, neuron: u16) -> Result<(), ChipError> {
        if (neuron as usize) < self.n_neurons {
            Ok(())
        } else {
            Err(ChipError::BadTarget { neuron: neuron as u32 })
        }
    }

    fn alloc_static(&mut self, post: u16, level: i8) -> Result<Column, ChipError> {
        self.check_neuron(post)?;
        if !(MIN_LEVEL..=MAX_LEVEL).contains(&level) {
            return Err(ChipError::BadWeightLevel(level));
        }
        let cur = self.static_cursor[post as usize];
        if (cur as usize) >= self.n_static {
            return Err(ChipError::ColumnsExhausted { neuron: post as u32 });
        }
        self.static_cursor[post as usize] = cur + 1;
        self.static_weights[post as usize * self.n_static + cur as usize] = level;
        Ok(Column::Static(cur))
    }

    fn alloc_plastic(&mut self, post: u16, x0: f64) -> Result<Column, ChipError> {
        self.check_neuron(post)?;
        let cur = self.plastic_cursor[post as usize];
        if (cur as usize) >= self.n_plastic {
            return Err(ChipError::ColumnsExhausted { neuron: post as u32 });
        }
        self.plastic_cursor[post as usize] = cur + 1;
        let idx = post as usize * self.n_plastic + cur as usize;
        self.plastic_x[idx] = x0.clamp(0.0, 1.0);
        self.plastic_enabled[idx] = true;
        self.enabled_list.push(idx as u32);
        Ok(Column::Plastic(cur))
    }

    /// Recurrent fixed-weight connection; allocates the next free static
    /// column on the postsynaptic neuron.
    pub fn connect_static(&mut self, pre: u16, post: u16, level: i8) -> Result<(), ChipError> {
        self.check_neuron(pre)?;
        if level == 0 {
            return Ok(());
        }
        let column = self.alloc_static(post, level)?;
        self.recurrent_routing[pre as usize].push(Target { neuron: post, column });
        Ok(())
    }

    /// Recurrent plastic connection with initial state `x0`.
    pub fn connect_plastic(&mut self, pre: u16, post: u16, x0: f64) -> Result<(), ChipError> {
        self.check_neuron(pre)?;
        let column = self.alloc_plastic(post, x0)?;
        self.recurrent_routing[pre as usize].push(Target { neuron: post, column });
        Ok(())
    }

    /// Route an external input address to a fixed-weight column.
    pub fn route_input_static(&mut self, addr: u32, post: u16, level: i8) -> Result<(), ChipError> {
        if (addr as usize) >= self.input_routing.len() {
            return Err(ChipError::UnknownAddress(addr));
        }
        if level == 0 {
            return Ok(());
        }
        let column = self.alloc_static(post, level)?;
        self.input_routing[addr as usize].push(Target { neuron: post, column });
        Ok(())
    }

    /// Route an external input address to a plastic column.
    pub fn route_input_plastic(&mut self, addr: u32, post: u16, x0: f64) -> Result<(), ChipError> {
        if (addr as usize) >= self.input_routing.len() {
            return Err(ChipError::UnknownAddress(addr));
        }
        let column = self.alloc_plastic(post, x0)?;
        self.input_routing[addr as usize].push(Target { neuron: post, column });
        Ok(())
    }

    pub fn input_targets(&self, addr: u32) -> Result<&[Target], ChipError> {
        self.input_routing
            .get(addr as usize)
            .map(|v| v.as_slice())
            .ok_or(ChipError::UnknownAddress(addr))
    }

    pub fn recurrent_targets(&self, neuron: u16) -> &[Target] {
        &self.recurrent_routing[neuron as usize]
    }

    pub fn static_level(&self, neuron: u16, col: u16) -> i8 {
        self.static_weights[neuron as usize * self.n_static + col as usize]
    }

    pub fn plastic_state(&self, neuron: u16, col: u16) -> f64 {
        self.plastic_x[neuron as usize * self.n_plastic + col as usize]
    }

    pub fn plastic_x_mut(&mut self, neuron: u16, col: u16) -> &mut f64 {
        &mut self.plastic_x[neuron as usize * self.n_plastic + col as usize]
    }

    pub fn is_plastic_enabled(&self, neuron: u16, col: u16) -> bool {
        self.plastic_enabled[neuron as usize * self.n_plastic + col as usize]
    }

    /// Drift every enabled plastic X toward its nearest bistable state by
    /// `delta`, clamped to [0, 1]. X below 0.5 drifts to 0, otherwise to 1,
    /// so drift alone never flips the efficacious weight.
    pub fn drift_plastic(&mut self, delta: f64) {
        for i in 0..self.enabled_list.len() {
            let idx = self.enabled_list[i] as usize;
            let x = self.plastic_x[idx];
            self.plastic_x[idx] = if x >= 0.5 {
                (x + delta).min(1.0)
            } else {
                (x - delta).max(0.0)
            };
        }
    }

    /// Flat indices of enabled plastic synapses (`neuron * n_plastic + col`).
    pub fn enabled_plastic(&self) -> &[u32] {
        &self.enabled_list
    }

    pub fn plastic_x_raw(&self) -> &[f64] {
        &self.plastic_x
    }

    /// Iterate all non-zero static entries as (neuron, column, level).
    pub fn static_entries(&self) -> impl Iterator<Item = (u16, u16, i8)> + '_ {
        (0..self.n_neurons).flat_map(move |n| {
            (0..self.n_static).filter_map(move |c| {
                let level = self.static_weights[n * self.n_static + c];
                (level != 0).then_some((n as u16, c as u16, level))
            })
        })
    }

    /// Iterate all input routes as (address, target).
    pub fn input_routes(&self) -> impl Iterator<Item = (u32, Target)> + '_ {
        self.input_routing
            .iter()
            .enumerate()
            .flat_map(|(a, v)| v.iter().map(move |t| (a as u32, *t)))
    }

    /// Iterate all recurrent routes as (source neuron, target).
    pub fn recurrent_routes(&self) -> impl Iterator<Item = (u16, Target)> + '_ {
        self.recurrent_routing
            .iter()
            .enumerate()
            .flat_map(|(n, v)| v.iter().map(move |t| (n as u16, *t)))
    }

    /// Total fan-out of an input address.
    pub fn fan_out(&self, addr: u32) -> usize {
        self.input_routing
            .get(addr as usize)
            .map_or(0, |v| v.len())
    }
}
