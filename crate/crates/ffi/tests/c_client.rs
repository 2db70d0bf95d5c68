//! Compiles a small C program against the generated header and the shared
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "vsched.h"

static int expect(int cond, const char *what) {
    if (!cond) {
        fprintf(stderr, "check failed: %s (%s)\n", what,
                vsched_last_error_message() ? vsched_last_error_message() : "no error");
    }
    return cond ? 0 : 1;
}

int main(int argc, char **argv) {
    int failures = 0;
    char *out = NULL;

    failures += expect(vsched_detect_trigger("Book a call", NULL, &out) == VSCHED_STATUS_OK, "detect");
    failures += expect(out && strstr(out, "\"book\"") != NULL, "keyword");
    vsched_string_free(out);
    out = NULL;

    failures += expect(vsched_validate_intent("{\"action\":\"nope\"}", &out) == VSCHED_STATUS_INVALID_INTENT,
                       "invalid intent status");
    failures += expect(out == NULL && vsched_last_error_message() != NULL, "error message");

    VschedStore *store = NULL;
    failures += expect(vsched_store_open(argv[1], &store) == VSCHED_STATUS_OK, "open");
    failures += expect(vsched_store_create_event(store,
        "{\"action\":\"create_event\",\"attendee\":\"Dr. Patel\",\"date_expression\":\"next Friday\",\"description\":\"meeting\"}",
        "2025-01-15T10:00:00-07:00", "America/Phoenix", &out) == VSCHED_STATUS_OK, "create");
    failures += expect(out && strstr(out, "2025-01-17T09:00:00-07:00") != NULL, "start");
    vsched_string_free(out);
    size_t len = 0;
    failures += expect(vsched_store_len(store, &len) == VSCHED_STATUS_OK && len == 1, "len");
    vsched_store_free(store);

    printf("c client: %d failures\n", failures);
    return failures == 0 ? 0 : 1;
}
"#;

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<this test binary>
    std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf()
}

fn cc() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc)
        .arg("--version")
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|_| cc)
}

fn include_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(include_dir().join("vsched.h")).unwrap();
    for name in [
        "vsched_last_error_message",
        "vsched_string_free",
        "vsched_validate_intent",
        "vsched_detect_trigger",
        "vsched_extract_fallback",
        "vsched_resolve_event",
        "vsched_store_open",
        "vsched_store_free",
        "vsched_store_create_event",
        "vsched_store_list_events",
        "vsched_store_find_conflicts",
        "vsched_gateway_new",
        "vsched_gateway_handle_utterance",
        "vsched_gateway_free",
        "typedef struct VschedStore VschedStore",
        "VSCHED_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let lib_dir = target_dir();
    let shared = lib_dir.join(if cfg!(target_os = "macos") {
        "libvsched_ffi.dylib"
    } else {
        "libvsched_ffi.so"
    });
    if cfg!(windows) || !shared.exists() {
        eprintln!("shared library not at {}, skipping", shared.display());
        return;
    }

    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("client.c");
    let exe = work.path().join("client");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(include_dir())
        .arg(&src)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lvsched_ffi")
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");

    let output = Command::new(&exe)
        .arg(work.path().join("cal.json"))
        .env("LD_LIBRARY_PATH", &lib_dir)
        .env("DYLD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        output.status.success(),
        "{stdout}\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(stdout.contains("0 failures"), "{stdout}");
}
