//! Fixed text placed ahead of the generated functions.

pub const COMMON: &str = "\
typedef struct { unsigned char *start; unsigned char *end; } bytes_t;
#define INT_MIN (-2147483647 - 1)
#define LONG_MIN (-9223372036854775807L - 1)
";

pub const EBPF: &str = "\
#define SEC(name) __attribute__((section(name), used))
";

/// Kernel layouts of the context structs; only the packet bounds are read.
pub const EBPF_CTX: &str = "\
struct xdp_md {
    unsigned int data;
    unsigned int data_end;
    unsigned int data_meta;
    unsigned int ingress_ifindex;
    unsigned int rx_queue_index;
    unsigned int egress_ifindex;
};
struct __sk_buff {
    unsigned int __bpl_fields[19];
    unsigned int data;
    unsigned int data_end;
};
static inline __attribute__((unused)) bytes_t __bpl_xdp_data(struct xdp_md *c)
{
    bytes_t b;
    b.start = (unsigned char *)(unsigned long)c->data;
    b.end = (unsigned char *)(unsigned long)c->data_end;
    return b;
}
static inline __attribute__((unused)) bytes_t __bpl_skb_data(struct __sk_buff *c)
{
    bytes_t b;
    b.start = (unsigned char *)(unsigned long)c->data;
    b.end = (unsigned char *)(unsigned long)c->data_end;
    return b;
}
";

pub const HOST: &str = "\
int printf(const char *, ...);
";

/// Context structs whose `data` field is computed in eBPF output.
pub const KERNEL_CTX: &[&str] = &["xdp_md", "__sk_buff"];

pub fn ctx_data_helper(s: &str) -> Option<&'static str> {
    match s {
        "xdp_md" => Some("__bpl_xdp_data"),
        "__sk_buff" => Some("__bpl_skb_data"),
        _ => None,
    }
}

/// Kernel helper numbers.
pub fn helper_id(name: &str) -> Option<u32> {
    match name {
        "bpf_map_lookup_elem" => Some(1),
        "bpf_get_current_uid_gid" => Some(15),
        _ => None,
    }
}

pub const HTONS: &str = "\
static inline __attribute__((unused)) unsigned short htons(unsigned short x)
{
    return (unsigned short)((x << 8) | (x >> 8));
}
";
