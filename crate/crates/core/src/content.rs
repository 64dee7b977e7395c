//! Named-content bookkeeping: the catalog, transmitter caches, and requester
//! demand expressed in whole segments.
//!
//! A cached content is always held complete, while a request shrinks from the
//! front as segments arrive, so live cache/request overlaps are contiguous
//! segment ranges. All byte accounting is integral (segments x segment size)
//! so conservation checks can be exact.

use rand::Rng;
use std::collections::BTreeSet;

use crate::geometry::{Node, Role};

/// One named content: how many segments it has and their size.
#[derive(Debug, Clone, Copy)]
pub struct ContentSpec {
    pub segments: u32,
    pub segment_bits: u64,
}

impl ContentSpec {
    pub fn total_bits(&self) -> u64 {
        self.segments as u64 * self.segment_bits
    }
}

/// The fixed set of contents circulating in one experiment.
#[derive(Debug, Clone)]
pub struct ContentCatalog {
    pub items: Vec<ContentSpec>,
}

impl ContentCatalog {
    /// Uniform catalog: `count` contents of `segments` segments each.
    pub fn uniform(count: u32, segments: u32, segment_bits: u64) -> Self {
        ContentCatalog {
            items: (0..count).map(|_| ContentSpec { segments, segment_bits }).collect(),
        }
    }

    pub fn spec(&self, content: u32) -> &ContentSpec {
        &self.items[content as usize]
    }

    /// Largest per-content segment count; normalizes availability scores.
    pub fn max_segments(&self) -> u32 {
        self.items.iter().map(|c| c.segments).max().unwrap_or(0)
    }
}

/// A contiguous run of segments `[start, end)` of one content.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentRange {
    pub content: u32,
    pub start: u32,
    pub end: u32,
}

impl SegmentRange {
    pub fn len(&self) -> u32 {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Segments of the request available from the cache: the overlap size, zero
/// across different contents.
pub fn availability(cache: &SegmentRange, request: &SegmentRange) -> u32 {
    if cache.content != request.content {
        return 0;
    }
    let lo = cache.start.max(request.start);
    let hi = cache.end.min(request.end);
    hi.saturating_sub(lo)
}

/// Contents a transmitter holds (each held in full).
#[derive(Debug, Clone, Default)]
pub struct Cache {
    pub contents: BTreeSet<u32>,
}

impl Cache {
    pub fn holds(&self, content: u32) -> bool {
        self.contents.contains(&content)
    }
}

/// Why a requester stopped using D2D delivery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestStatus {
    /// Still trying to fetch over D2D.
    Active,
    /// Everything delivered over D2D.
    Complete,
    /// Gave up on D2D; the remainder ships over cellular.
    Cellular,
}

/// One requester's demand and retry state.
#[derive(Debug, Clone)]
pub struct Request {
    pub node: usize,
    pub content: u32,
    /// Segments already delivered (requests shrink from the front).
    pub delivered: u32,
    pub total: u32,
    /// Consecutive failed association frames.
    pub failures: u32,
    pub status: RequestStatus,
}

impl Request {
    pub fn remaining_segments(&self) -> u32 {
        self.total - self.delivered
    }

    pub fn remaining_bits(&self, catalog: &ContentCatalog) -> u64 {
        self.remaining_segments() as u64 * catalog.spec(self.content).segment_bits
    }

    /// The still-wanted segment range.
    pub fn segment_range(&self) -> SegmentRange {
        SegmentRange { content: self.content, start: self.delivered, end: self.total }
    }
}

/// Record `delivered` more segments, clamped to the open demand; a request
/// with nothing left becomes Complete.
pub fn update_request(request: &mut Request, delivered: u32) {
    debug_assert!(
        delivered <= request.remaining_segments(),
        "delivery exceeds open demand and will be clamped"
    );
    request.delivered = (request.delivered + delivered).min(request.total);
    if request.remaining_segments() == 0 {
        request.status = RequestStatus::Complete;
    }
}

/// Segments of `request` the cache can serve right now (full-content caches).
pub fn cached_availability(cache: &Cache, request: &Request) -> u32 {
    if cache.holds(request.content) {
        request.remaining_segments()
    } else {
        0
    }
}

/// Fill transmitter caches: each transmitter holds each content independently
/// with probability `cache_probability`. Requesters get empty caches. Indexed
/// by node id.
pub fn populate_caches<R: Rng>(
    nodes: &[Node],
    catalog: &ContentCatalog,
    cache_probability: f64,
    rng: &mut R,
) -> Vec<Cache> {
    nodes
        .iter()
        .map(|node| {
            let mut cache = Cache::default();
            if node.role == Role::Transmitter {
                for content in 0..catalog.items.len() as u32 {
                    if rng.gen_bool(cache_probability) {
                        cache.contents.insert(content);
                    }
                }
            }
            cache
        })
        .collect()
}

/// Draw one full-content request per requester, content chosen uniformly.
pub fn draw_requests<R: Rng>(nodes: &[Node], catalog: &ContentCatalog, rng: &mut R) -> Vec<Request> {
    nodes
        .iter()
        .filter(|n| n.role == Role::Requester)
        .map(|n| {
            let content = rng.gen_range(0..catalog.items.len() as u32);
            Request {
                node: n.id,
                content,
                delivered: 0,
                total: catalog.spec(content).segments,
                failures: 0,
                status: RequestStatus::Active,
            }
        })
        .collect()
}
