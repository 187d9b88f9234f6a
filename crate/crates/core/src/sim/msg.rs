//! Air-interface message set and its canonical rendering.
//!
//! Every delivered frame renders to exactly one line of trace text, and
//! the same rendering feeds the per-message authentication tags, so the
//! format here is normative: keys are sorted, absent optional fields
//! render as `-`, and byte strings render as lowercase hex.

use crate::auth::Imsi;
use crate::bits::render_bits;
use crate::cipher::CipherSuite;

/// Addressable parties on the radio interface.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityId {
    /// A subscriber handset, by station id.
    Ms(String),
    /// The genuine network (BTS/MSC face of it).
    Net,
    /// A rogue base station.
    Fake,
    /// A standalone attacker transceiver.
    Atk,
}

impl std::fmt::Display for EntityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EntityId::Ms(id) => write!(f, "ms:{id}"),
            EntityId::Net => f.write_str("net"),
            EntityId::Fake => f.write_str("fake"),
            EntityId::Atk => f.write_str("atk"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityKind {
    Imsi,
    Imei,
}

impl IdentityKind {
    pub fn name(self) -> &'static str {
        match self {
            IdentityKind::Imsi => "IMSI",
            IdentityKind::Imei => "IMEI",
        }
    }
}

/// A subscriber identity as carried over the air.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Identity {
    Imsi(Imsi),
    Tmsi(u32),
    Imei(String),
}

impl std::fmt::Display for Identity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Identity::Imsi(i) => write!(f, "imsi:{i}"),
            Identity::Tmsi(t) => write!(f, "tmsi:{t:08x}"),
            Identity::Imei(e) => write!(f, "imei:{e}"),
        }
    }
}

fn hex16(b: &[u8; 16]) -> String {
    hex::encode(b)
}

fn opt_hex16(b: &Option<[u8; 16]>) -> String {
    match b {
        Some(v) => hex16(v),
        None => "-".to_owned(),
    }
}

/// The signalling and user-plane messages the lab exchanges on the air
/// interface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UmMessage {
    /// Random-access burst; `reference` disambiguates retries.
    ChannelRequest { reference: u8 },
    /// Grant of a dedicated channel after a random-access win.
    ImmediateAssignment,
    /// Network (or rogue) asks for a subscriber by identity.
    PagingRequest { identity: Identity },
    IdentityRequest { kind: IdentityKind },
    IdentityResponse { identity: Identity },
    /// Challenge. In the hardened protocol the network also proves
    /// itself: `net_sres` is its own response over `rand` and
    /// `net_nonce`. Legacy leaves both absent.
    AuthRequest {
        rand: [u8; 16],
        net_sres: Option<u32>,
        net_nonce: Option<[u8; 16]>,
    },
    /// Subscriber response; hardened adds a fresh nonce so the exchange
    /// cannot be replayed at the network either.
    AuthResponse { sres: u32, ms_nonce: Option<[u8; 16]> },
    CipherModeCommand { suite: CipherSuite },
    CipherModeComplete,
    TmsiRealloc { tmsi: u32 },
    /// One burst of user traffic. `payload` is a bit vector (at most
    /// 114 bits); `frame` is the per-direction cipher frame count.
    Traffic {
        frame: u32,
        payload: Vec<u8>,
        ciphered: bool,
    },
    /// A short message, possibly spanning several cipher frames.
    SmsDeliver {
        originator: String,
        text: Vec<u8>,
        ciphered: bool,
        frame: u32,
    },
    /// Positioning query and its answer (micro-degrees).
    LocationRequest,
    LocationResponse { lat: i64, lon: i64 },
}

impl UmMessage {
    pub fn variant_name(&self) -> &'static str {
        match self {
            UmMessage::ChannelRequest { .. } => "ChannelRequest",
            UmMessage::ImmediateAssignment => "ImmediateAssignment",
            UmMessage::PagingRequest { .. } => "PagingRequest",
            UmMessage::IdentityRequest { .. } => "IdentityRequest",
            UmMessage::IdentityResponse { .. } => "IdentityResponse",
            UmMessage::AuthRequest { .. } => "AuthRequest",
            UmMessage::AuthResponse { .. } => "AuthResponse",
            UmMessage::CipherModeCommand { .. } => "CipherModeCommand",
            UmMessage::CipherModeComplete => "CipherModeComplete",
            UmMessage::TmsiRealloc { .. } => "TmsiRealloc",
            UmMessage::Traffic { .. } => "Traffic",
            UmMessage::SmsDeliver { .. } => "SmsDeliver",
            UmMessage::LocationRequest => "LocationRequest",
            UmMessage::LocationResponse { .. } => "LocationResponse",
        }
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        match self {
            UmMessage::ChannelRequest { reference } => {
                vec![("ref", reference.to_string())]
            }
            UmMessage::ImmediateAssignment => vec![],
            UmMessage::PagingRequest { identity } => {
                vec![("identity", identity.to_string())]
            }
            UmMessage::IdentityRequest { kind } => vec![("kind", kind.name().to_owned())],
            UmMessage::IdentityResponse { identity } => {
                vec![("identity", identity.to_string())]
            }
            UmMessage::AuthRequest { rand, net_sres, net_nonce } => vec![
                ("rand", hex16(rand)),
                (
                    "net_sres",
                    net_sres.map_or_else(|| "-".to_owned(), |s| format!("{s:08x}")),
                ),
                ("net_nonce", opt_hex16(net_nonce)),
            ],
            UmMessage::AuthResponse { sres, ms_nonce } => vec![
                ("sres", format!("{sres:08x}")),
                ("ms_nonce", opt_hex16(ms_nonce)),
            ],
            UmMessage::CipherModeCommand { suite } => {
                vec![("suite", suite.name().to_owned())]
            }
            UmMessage::CipherModeComplete => vec![],
            UmMessage::TmsiRealloc { tmsi } => vec![("tmsi", format!("{tmsi:08x}"))],
            UmMessage::Traffic { frame, payload, ciphered } => vec![
                ("frame", frame.to_string()),
                ("payload", render_bits(payload)),
                ("ciphered", ciphered.to_string()),
            ],
            UmMessage::SmsDeliver { originator, text, ciphered, frame } => vec![
                ("originator", originator.clone()),
                ("text", hex::encode(text)),
                ("ciphered", ciphered.to_string()),
                ("frame", frame.to_string()),
            ],
            UmMessage::LocationRequest => vec![],
            UmMessage::LocationResponse { lat, lon } => {
                vec![("lat", lat.to_string()), ("lon", lon.to_string())]
            }
        }
    }

    /// Canonical `Variant{key=value,...}` rendering with sorted keys.
    /// This exact string (without any tag) is what per-message
    /// authentication tags sign.
    pub fn render(&self) -> String {
        render_with(self.variant_name(), self.fields())
    }
}

fn render_with(name: &str, mut fields: Vec<(&'static str, String)>) -> String {
    fields.sort_by_key(|(k, _)| *k);
    let body: Vec<String> = fields.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{name}{{{}}}", body.join(","))
}

/// One transmission on the air interface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub src: EntityId,
    pub dst: EntityId,
    pub msg: UmMessage,
    /// Integrity tag (hardened protocol, from the challenge onward).
    pub mac: Option<u64>,
    /// True when an attacker put this frame on the air directly.
    pub injected: bool,
}

impl Frame {
    pub fn new(src: EntityId, dst: EntityId, msg: UmMessage) -> Self {
        Frame { src, dst, msg, mac: None, injected: false }
    }

    pub fn with_mac(mut self, mac: u64) -> Self {
        self.mac = Some(mac);
        self
    }

    /// Direction string used both in traces and as tag context.
    pub fn dir(&self) -> String {
        format!("{}->{}", self.src, self.dst)
    }

    /// Message rendering for traces: the canonical body plus the tag,
    /// when one is attached, merged into the sorted key list.
    pub fn render_msg(&self) -> String {
        let mut fields = self.msg.fields();
        if let Some(mac) = self.mac {
            fields.push(("mac", format!("{mac:016x}")));
        }
        render_with(self.msg.variant_name(), fields)
    }
}
