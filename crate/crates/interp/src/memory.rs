use std::collections::BTreeMap;

use beepl_core::{BlockId, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Perm {
    Freeable,
    ReadOnly,
}

/// One allocation. Typed cells sit at byte offsets; `raw` mirrors integer
/// cells in little-endian form and is the only content of packet buffers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub size: u32,
    pub perm: Perm,
    pub cells: BTreeMap<u32, Value>,
    pub raw: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MemError {
    #[error("block {0} is not allocated")]
    Invalid(u64),
    #[error("offset {1} is outside block {0}")]
    OutOfBounds(u64, u32),
    #[error("read of uninitialized offset {1} in block {0}")]
    Uninit(u64, u32),
    #[error("block {0} is read-only")]
    ReadOnly(u64),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Memory {
    pub blocks: BTreeMap<BlockId, Block>,
    pub next_block: u64,
}

impl Memory {
    pub fn new() -> Memory {
        Memory { blocks: BTreeMap::new(), next_block: 1 }
    }

    /// Returns a block id greater than every id handed out before.
    pub fn alloc(&mut self, size: u32, perm: Perm) -> BlockId {
        let id = BlockId(self.next_block.max(1));
        self.next_block = id.0 + 1;
        self.blocks.insert(id, Block { size, perm, cells: BTreeMap::new(), raw: vec![0; size as usize] });
        id
    }

    pub fn alloc_raw(&mut self, bytes: Vec<u8>, perm: Perm) -> BlockId {
        let b = self.alloc(bytes.len() as u32, perm);
        self.blocks.get_mut(&b).expect("just allocated").raw = bytes;
        b
    }

    pub fn free(&mut self, b: BlockId) -> Option<Block> {
        self.blocks.remove(&b)
    }

    pub fn block(&self, b: BlockId) -> Result<&Block, MemError> {
        self.blocks.get(&b).ok_or(MemError::Invalid(b.0))
    }

    pub fn is_valid_access(&self, b: BlockId, perm: Perm) -> bool {
        self.blocks.get(&b).is_some_and(|k| perm == Perm::ReadOnly || k.perm == Perm::Freeable)
    }

    pub fn load(&self, b: BlockId, off: u32) -> Result<&Value, MemError> {
        let k = self.block(b)?;
        if off >= k.size.max(1) {
            return Err(MemError::OutOfBounds(b.0, off));
        }
        k.cells.get(&off).ok_or(MemError::Uninit(b.0, off))
    }

    pub fn store(&mut self, b: BlockId, off: u32, v: Value) -> Result<(), MemError> {
        let k = self.blocks.get_mut(&b).ok_or(MemError::Invalid(b.0))?;
        if k.perm != Perm::Freeable {
            return Err(MemError::ReadOnly(b.0));
        }
        if off >= k.size.max(1) {
            return Err(MemError::OutOfBounds(b.0, off));
        }
        let bytes = match &v {
            Value::Int(i) => i.to_le_bytes(),
            Value::Bool(x) => vec![u8::from(*x)],
            _ => Vec::new(),
        };
        for (i, byte) in bytes.into_iter().enumerate() {
            if let Some(slot) = k.raw.get_mut(off as usize + i) {
                *slot = byte;
            }
        }
        k.cells.insert(off, v);
        Ok(())
    }

    pub fn read_bytes(&self, b: BlockId, off: u32, len: u32) -> Result<&[u8], MemError> {
        let k = self.block(b)?;
        let end = off as u64 + len as u64;
        if end > k.raw.len() as u64 {
            return Err(MemError::OutOfBounds(b.0, off));
        }
        Ok(&k.raw[off as usize..end as usize])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_ids_increase() {
        let mut m = Memory::new();
        let a = m.alloc(4, Perm::Freeable);
        let b = m.alloc(8, Perm::Freeable);
        m.free(b);
        let c = m.alloc(8, Perm::Freeable);
        assert!(a < b && b < c);
    }

    #[test]
    fn load_store_and_errors() {
        let mut m = Memory::new();
        let a = m.alloc(4, Perm::Freeable);
        assert_eq!(m.load(a, 0), Err(MemError::Uninit(a.0, 0)));
        m.store(a, 0, Value::int(0x01020304)).unwrap();
        assert_eq!(m.load(a, 0), Ok(&Value::int(0x01020304)));
        assert_eq!(m.read_bytes(a, 0, 4).unwrap(), &[4, 3, 2, 1]);
        assert!(m.store(a, 9, Value::int(1)).is_err());
        let r = m.alloc_raw(vec![1, 2], Perm::ReadOnly);
        assert_eq!(m.store(r, 0, Value::int(1)), Err(MemError::ReadOnly(r.0)));
        assert!(m.read_bytes(r, 1, 2).is_err());
        assert!(m.is_valid_access(r, Perm::ReadOnly) && !m.is_valid_access(r, Perm::Freeable));
    }
}
