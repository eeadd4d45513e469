use std::collections::BTreeMap;

use beepl_core::{IntVal, PrimTy, Ty, Value};

use crate::memory::MemError;
use crate::state::State;
use crate::step::Fault;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoEvent {
    pub helper: String,
    pub args: Vec<Value>,
    pub result: Value,
}

/// Deterministic stand-in for the kernel side of helper calls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalWorld {
    pub maps: BTreeMap<String, BTreeMap<i64, i64>>,
    pub uid_gid: u64,
    pub packet: Vec<u8>,
    pub io_log: Vec<IoEvent>,
}

pub const DEFAULT_UID_GID: u64 = 0x0000_03E8_0000_03E8;

impl Default for ExternalWorld {
    fn default() -> ExternalWorld {
        ExternalWorld { maps: BTreeMap::new(), uid_gid: DEFAULT_UID_GID, packet: Vec::new(), io_log: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PacketError {
    #[error("invalid hex in packet file: {0}")]
    Hex(#[from] hex::FromHexError),
}

/// Decodes a packet written as hex digits. Whitespace is ignored and `#`
/// starts a comment that runs to the end of the line.
pub fn decode_packet_hex(text: &str) -> Result<Vec<u8>, PacketError> {
    let digits: String = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.chars().filter(|c| !c.is_whitespace()))
        .collect();
    Ok(hex::decode(digits)?)
}

impl ExternalWorld {
    pub fn with_packet(mut self, packet: Vec<u8>) -> ExternalWorld {
        self.packet = packet;
        self
    }

    pub fn with_map_entry(mut self, map: &str, key: i64, value: i64) -> ExternalWorld {
        self.maps.entry(map.to_string()).or_default().insert(key, value);
        self
    }

    fn log(&mut self, helper: &str, args: &[Value], result: &Value) {
        self.io_log.push(IoEvent { helper: helper.to_string(), args: args.to_vec(), result: result.clone() });
    }
}

fn mem(e: MemError) -> Fault {
    Fault::Memory(e)
}

/// Rule EAPP: runs an external function.
pub(crate) fn call_external(s: &mut State, w: &mut ExternalWorld, name: &str, args: &[Value]) -> Result<Value, Fault> {
    let sig = s.delta.psi.get(name).cloned().ok_or_else(|| Fault::Unbound(name.to_string()))?;
    let result = match name {
        "bpf_get_current_uid_gid" => Value::Int(IntVal::wrap(PrimTy::LONG, w.uid_gid as i128)),
        "htons" => {
            let v = args.first().and_then(Value::as_int).ok_or_else(|| Fault::NoRule("htons argument".into()))?;
            Value::Int(IntVal::wrap(PrimTy::U16, (v.bits() as u16).swap_bytes() as i128))
        }
        "bpf_map_lookup_elem" => match args {
            [Value::Some(m), Value::Some(k)] => {
                let (Value::Loc(mb, _), Value::Loc(kb, ko)) = (&**m, &**k) else {
                    return Err(Fault::NoRule("map lookup on non-locations".into()));
                };
                let name = s.map_blocks.get(mb).cloned().ok_or_else(|| Fault::NoRule("not a map handle".into()))?;
                let key = s.theta.load(*kb, *ko).map_err(mem)?.as_int().map(|i| i.value() as i64);
                let key = key.ok_or_else(|| Fault::NoRule("map key is not an integer".into()))?;
                match (s.lookups.get(&(name.clone(), key)), w.maps.get(&name).and_then(|m| m.get(&key))) {
                    (Some(b), _) => Value::Some(Box::new(Value::Loc(*b, 0))),
                    (None, Some(v)) => {
                        let b = s.alloc_var(&Ty::LONG, Some(Value::long(*v)));
                        s.lookups.insert((name, key), b);
                        Value::Some(Box::new(Value::Loc(b, 0)))
                    }
                    (None, None) => Value::None(sig.ret.clone()),
                }
            }
            _ => Value::None(sig.ret.clone()),
        },
        _ => Value::zero_of(&sig.ret).unwrap_or(Value::Unit),
    };
    w.log(name, args, &result);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_packets() {
        assert_eq!(decode_packet_hex("86 dd # ipv6\n0a").unwrap(), vec![0x86, 0xDD, 0x0A]);
        assert_eq!(decode_packet_hex("").unwrap(), Vec::<u8>::new());
        assert!(decode_packet_hex("abc").is_err());
        assert!(decode_packet_hex("zz").is_err());
    }
}
