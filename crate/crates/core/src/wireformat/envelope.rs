use super::error::EnvelopeError;

pub const ENVELOPE_MAGIC: [u8; 4] = *b"CPLS";
pub const ENVELOPE_VERSION: u16 = 1;
/// magic (4) + version (2) + kind (1)
pub const ENVELOPE_HEADER_LEN: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum EnvelopeKind {
    Request = 0,
    ResponseOk = 1,
    ResponseErr = 2,
}

impl TryFrom<u8> for EnvelopeKind {
    type Error = EnvelopeError;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            0 => Ok(EnvelopeKind::Request),
            1 => Ok(EnvelopeKind::ResponseOk),
            2 => Ok(EnvelopeKind::ResponseErr),
            other => Err(EnvelopeError::UnknownKind(other)),
        }
    }
}

/// One framed message: `"CPLS"`, version `u16` LE, kind `u8`, then the body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub body: Vec<u8>,
}

impl Envelope {
    pub fn new(kind: EnvelopeKind, body: Vec<u8>) -> Self {
        Self { kind, body }
    }

    pub fn request(body: Vec<u8>) -> Self {
        Self::new(EnvelopeKind::Request, body)
    }

    pub fn ok(body: Vec<u8>) -> Self {
        Self::new(EnvelopeKind::ResponseOk, body)
    }

    /// Error response whose body is the binary encoding of `message`.
    pub fn error(message: &str) -> Self {
        Self::new(EnvelopeKind::ResponseErr, super::to_bytes(&message.to_owned()))
    }

    pub fn encoded_len(&self) -> usize {
        ENVELOPE_HEADER_LEN + self.body.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&ENVELOPE_MAGIC);
        out.extend_from_slice(&ENVELOPE_VERSION.to_le_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EnvelopeError> {
        if bytes.len() < ENVELOPE_HEADER_LEN {
            return Err(EnvelopeError::TooShort(bytes.len()));
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("length checked");
        if magic != ENVELOPE_MAGIC {
            return Err(EnvelopeError::BadMagic(magic));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != ENVELOPE_VERSION {
            return Err(EnvelopeError::UnsupportedVersion(version));
        }
        let kind = EnvelopeKind::try_from(bytes[6])?;
        Ok(Self { kind, body: bytes[ENVELOPE_HEADER_LEN..].to_vec() })
    }

    /// Decodes the message carried by an error envelope.
    pub fn error_message(&self) -> Option<String> {
        match self.kind {
            EnvelopeKind::ResponseErr => Some(
                super::from_bytes::<String>(&self.body)
                    .unwrap_or_else(|_| String::from_utf8_lossy(&self.body).into_owned()),
            ),
            _ => None,
        }
    }
}
