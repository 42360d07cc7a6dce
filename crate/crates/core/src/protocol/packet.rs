//! Packet types and their little-endian trace encoding.
//!
//! ```text
//! Beacon        [type=1][id:4][energy:4][x:2][y:2]
//! CellExit      [type=2][id:4][x:2][y:2][seq:4]
//! GatewayRoute  [type=3][gw:4][payload:4][src:4][dst:4][descriptor:4]
//! ```

use std::fmt;

use thiserror::Error;

use super::{Energy, NodeId};
use crate::descriptors::{DescriptorError, RoutingDescriptor, WireDescriptor};
use crate::grid::Cell;

pub const BEACON_LEN: usize = 13;
pub const CELL_EXIT_LEN: usize = 13;
pub const GATEWAY_ROUTE_LEN: usize = 21;

const TYPE_BEACON: u8 = 1;
const TYPE_CELL_EXIT: u8 = 2;
const TYPE_GATEWAY_ROUTE: u8 = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("cell {0} has a coordinate outside 0..=65535")]
    CellRange(Cell),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error("frame of {got} bytes, expected {want}")]
    Length { got: usize, want: usize },
    #[error("unknown packet type {0}")]
    UnknownType(u8),
    #[error("empty frame")]
    Empty,
}

/// Delivery scope of a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketClass {
    /// Received by the addressee only.
    Unicast,
    /// Received by every node in range, never forwarded.
    LocalBroadcast,
    /// Flooded through the grid by selected gateways.
    GlobalBroadcast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Beacon {
    pub sender: NodeId,
    pub energy: Energy,
    pub cell: Cell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellExit {
    pub origin: NodeId,
    pub new_cell: Cell,
    pub seq: u32,
}

/// A data packet travelling along one of the parallel paths.
///
/// The cells are carried in memory only. `source_cell` and `dest_cell`
/// restore the descriptor's deltas; `at_cell` is the cell whose gateway is
/// addressed, which is also derivable by walking the path up to the
/// descriptor's position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GatewayRoute {
    pub gateway: NodeId,
    pub payload: u32,
    pub source: NodeId,
    pub dest: NodeId,
    pub source_cell: Cell,
    pub dest_cell: Cell,
    pub at_cell: Cell,
    pub descriptor: RoutingDescriptor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Packet {
    Beacon(Beacon),
    CellExit(CellExit),
    GatewayRoute(GatewayRoute),
}

impl Packet {
    pub fn class(&self) -> PacketClass {
        match self {
            Packet::Beacon(_) => PacketClass::LocalBroadcast,
            Packet::CellExit(_) => PacketClass::GlobalBroadcast,
            Packet::GatewayRoute(_) => PacketClass::Unicast,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Packet::Beacon(_) => "beacon",
            Packet::CellExit(_) => "cell_exit",
            Packet::GatewayRoute(_) => "gateway_route",
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        let mut out = Vec::with_capacity(GATEWAY_ROUTE_LEN);
        match self {
            Packet::Beacon(b) => {
                out.push(TYPE_BEACON);
                out.extend_from_slice(&b.sender.to_le_bytes());
                out.extend_from_slice(&b.energy.to_le_bytes());
                put_cell(&mut out, b.cell)?;
            }
            Packet::CellExit(c) => {
                out.push(TYPE_CELL_EXIT);
                out.extend_from_slice(&c.origin.to_le_bytes());
                put_cell(&mut out, c.new_cell)?;
                out.extend_from_slice(&c.seq.to_le_bytes());
            }
            Packet::GatewayRoute(g) => {
                out.push(TYPE_GATEWAY_ROUTE);
                out.extend_from_slice(&g.gateway.to_le_bytes());
                out.extend_from_slice(&g.payload.to_le_bytes());
                out.extend_from_slice(&g.source.to_le_bytes());
                out.extend_from_slice(&g.dest.to_le_bytes());
                out.extend_from_slice(&g.descriptor.to_wire()?.0);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Packet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Packet::Beacon(b) => write!(f, "beacon sender={} energy={} cell={}", b.sender, b.energy, b.cell),
            Packet::CellExit(c) => write!(f, "cell_exit origin={} cell={} seq={}", c.origin, c.new_cell, c.seq),
            Packet::GatewayRoute(g) => write!(
                f,
                "gateway_route gw={} payload={} src={} dst={} desc={}",
                g.gateway, g.payload, g.source, g.dest, g.descriptor
            ),
        }
    }
}

/// Decoded gateway-route frame. The descriptor stays in wire form until the
/// route endpoints are known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GatewayRouteFrame {
    pub gateway: NodeId,
    pub payload: u32,
    pub source: NodeId,
    pub dest: NodeId,
    pub descriptor: WireDescriptor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Beacon(Beacon),
    CellExit(CellExit),
    GatewayRoute(GatewayRouteFrame),
}

fn put_cell(out: &mut Vec<u8>, c: Cell) -> Result<(), WireError> {
    let x = u16::try_from(c.x).map_err(|_| WireError::CellRange(c))?;
    let y = u16::try_from(c.y).map_err(|_| WireError::CellRange(c))?;
    out.extend_from_slice(&x.to_le_bytes());
    out.extend_from_slice(&y.to_le_bytes());
    Ok(())
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn u16(&mut self) -> u16 {
        let (head, rest) = self.0.split_at(2);
        self.0 = rest;
        u16::from_le_bytes(head.try_into().unwrap())
    }

    fn u32(&mut self) -> u32 {
        let (head, rest) = self.0.split_at(4);
        self.0 = rest;
        u32::from_le_bytes(head.try_into().unwrap())
    }

    fn cell(&mut self) -> Cell {
        let x = self.u16();
        let y = self.u16();
        Cell::new(x as i32, y as i32)
    }
}

pub fn decode(bytes: &[u8]) -> Result<Frame, WireError> {
    let (&ty, body) = bytes.split_first().ok_or(WireError::Empty)?;
    let want = match ty {
        TYPE_BEACON => BEACON_LEN,
        TYPE_CELL_EXIT => CELL_EXIT_LEN,
        TYPE_GATEWAY_ROUTE => GATEWAY_ROUTE_LEN,
        other => return Err(WireError::UnknownType(other)),
    };
    if bytes.len() != want {
        return Err(WireError::Length { got: bytes.len(), want });
    }
    let mut r = Reader(body);
    Ok(match ty {
        TYPE_BEACON => Frame::Beacon(Beacon {
            sender: r.u32(),
            energy: r.u32(),
            cell: r.cell(),
        }),
        TYPE_CELL_EXIT => Frame::CellExit(CellExit {
            origin: r.u32(),
            new_cell: r.cell(),
            seq: r.u32(),
        }),
        _ => Frame::GatewayRoute(GatewayRouteFrame {
            gateway: r.u32(),
            payload: r.u32(),
            source: r.u32(),
            dest: r.u32(),
            descriptor: WireDescriptor(r.0.try_into().unwrap()),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::initial_descriptor;
    use proptest::prelude::*;

    #[test]
    fn beacon_layout() {
        let p = Packet::Beacon(Beacon {
            sender: 0x0102_0304,
            energy: 80,
            cell: Cell::new(3, 4),
        });
        assert_eq!(p.encode().unwrap(), [1, 4, 3, 2, 1, 80, 0, 0, 0, 3, 0, 4, 0]);
        assert_eq!(p.class(), PacketClass::LocalBroadcast);
    }

    #[test]
    fn cell_exit_layout() {
        let p = Packet::CellExit(CellExit {
            origin: 7,
            new_cell: Cell::new(2, 3),
            seq: 0x100,
        });
        let bytes = p.encode().unwrap();
        assert_eq!(bytes, [2, 7, 0, 0, 0, 2, 0, 3, 0, 0, 1, 0, 0]);
        assert_eq!(decode(&bytes).unwrap(), Frame::CellExit(CellExit { origin: 7, new_cell: Cell::new(2, 3), seq: 256 }));
    }

    #[test]
    fn gateway_route_layout() {
        let (s, d) = (Cell::new(0, 0), Cell::new(5, 2));
        let g = GatewayRoute {
            gateway: 9,
            payload: 1,
            source: 2,
            dest: 3,
            source_cell: s,
            dest_cell: d,
            at_cell: Cell::new(1, 0),
            descriptor: initial_descriptor(s, d, 1).unwrap(),
        };
        let bytes = Packet::GatewayRoute(g).encode().unwrap();
        assert_eq!(bytes.len(), GATEWAY_ROUTE_LEN);
        assert_eq!(&bytes[17..], &[1, 1, 1, 1]);
        let Frame::GatewayRoute(f) = decode(&bytes).unwrap() else { panic!() };
        assert_eq!((f.gateway, f.payload, f.source, f.dest), (9, 1, 2, 3));
        assert_eq!(RoutingDescriptor::from_wire(f.descriptor, s, d).unwrap(), g.descriptor);
    }

    #[test]
    fn decode_errors() {
        assert_eq!(decode(&[]), Err(WireError::Empty));
        assert_eq!(decode(&[9, 0]), Err(WireError::UnknownType(9)));
        assert_eq!(decode(&[1, 0, 0]), Err(WireError::Length { got: 3, want: 13 }));
        let neg = Packet::Beacon(Beacon { sender: 1, energy: 1, cell: Cell::new(-1, 0) });
        assert!(matches!(neg.encode(), Err(WireError::CellRange(_))));
    }

    proptest! {
        #[test]
        fn control_frames_round_trip(id in any::<u32>(), e in any::<u32>(), x in 0i32..=65535, y in 0i32..=65535, seq in any::<u32>()) {
            let b = Beacon { sender: id, energy: e, cell: Cell::new(x, y) };
            prop_assert_eq!(decode(&Packet::Beacon(b).encode().unwrap()).unwrap(), Frame::Beacon(b));
            let c = CellExit { origin: id, new_cell: Cell::new(y, x), seq };
            prop_assert_eq!(decode(&Packet::CellExit(c).encode().unwrap()).unwrap(), Frame::CellExit(c));
        }
    }
}
