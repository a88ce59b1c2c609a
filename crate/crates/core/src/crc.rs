//! Short CRC used to protect each 16-bit data group.
//!
//! MSB-first, non-reflected, no final XOR. With the default generator
//! `x^5 + x^2 + 1` and an all-ones initial register the checksum of an
//! all-zero group is non-zero.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crc {
    /// Generator coefficients below the leading term (`x^5 + x^2 + 1` is `0b00101`).
    pub poly: u32,
    pub init: u32,
    pub width: u32,
}

impl Crc {
    pub const DEFAULT: Crc = Crc {
        poly: 0b00101,
        init: 0b11111,
        width: 5,
    };

    fn mask(&self) -> u32 {
        (1u32 << self.width) - 1
    }

    /// Run `len` bits of `data` (MSB first) through the register.
    pub fn register(&self, init: u32, data: u32, len: u32) -> u32 {
        let top = 1u32 << (self.width - 1);
        let mut reg = init & self.mask();
        for i in (0..len).rev() {
            let bit = (data >> i) & 1;
            let feedback = ((reg & top) != 0) as u32 ^ bit;
            reg = (reg << 1) & self.mask();
            if feedback == 1 {
                reg ^= self.poly;
            }
        }
        reg
    }

    pub fn checksum(&self, data: u32, data_bits: u32) -> u32 {
        self.register(self.init, data, data_bits)
    }

    /// Append the checksum below the data bits.
    pub fn encode(&self, data: u32, data_bits: u32) -> u32 {
        (data << self.width) | self.checksum(data, data_bits)
    }

    pub fn verify(&self, block: u32, data_bits: u32) -> bool {
        let data = block >> self.width;
        let check = block & self.mask();
        data >> data_bits == 0 && self.checksum(data, data_bits) == check
    }
}

impl Default for Crc {
    fn default() -> Self {
        Crc::DEFAULT
    }
}
