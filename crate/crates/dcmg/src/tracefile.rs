use std::io::{self, Write};

use dcmg_core::reconfig::ConnectivityMatrix;
use dcmg_core::sim::{PtchReport, TraceRecord};

/// Writes `t,v_bus,i_1..i_U,mode_1..mode_U,dxv_1..dxv_U,dxc_1..dxc_U,event,safety`.
///
/// Floats use the shortest representation that round-trips, so equal traces
/// give byte-identical files.
pub fn write_trace<W: Write>(mut w: W, trace: &[TraceRecord], units: usize) -> io::Result<()> {
    let mut header = vec!["t".to_owned(), "v_bus".to_owned()];
    for prefix in ["i", "mode", "dxv", "dxc"] {
        header.extend((1..=units).map(|u| format!("{prefix}_{u}")));
    }
    header.push("event".into());
    header.push("safety".into());
    writeln!(w, "{}", header.join(","))?;

    for r in trace {
        write!(w, "{},{}", r.t, r.v_bus)?;
        for i in &r.i_out {
            write!(w, ",{i}")?;
        }
        for m in &r.modes {
            write!(w, ",{}", m.as_str())?;
        }
        for x in r.dxv.iter().chain(&r.dxc) {
            write!(w, ",{x}")?;
        }
        let event = r.event.map(|e| e.to_string()).unwrap_or_default();
        writeln!(w, ",{event},{}", r.safety)?;
    }
    w.flush()
}

fn write_matrix<W: Write>(w: &mut W, label: &str, q: &ConnectivityMatrix) -> io::Result<()> {
    for (u, row) in q.rows().iter().enumerate() {
        write!(w, "{label},{}", u + 1)?;
        for &b in row {
            write!(w, ",{}", u8::from(b))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Dumps the transmitted rows and every unit's decoded matrix as 0/1 CSV.
pub fn write_q_dump<W: Write>(mut w: W, report: &PtchReport) -> io::Result<()> {
    let n = report.transmitted.len();
    let cols: Vec<String> = (1..=n).map(|c| format!("q_{c}")).collect();
    writeln!(w, "# ptch start={} end={}", report.start, report.end)?;
    writeln!(w, "matrix,row,{}", cols.join(","))?;
    write_matrix(&mut w, "transmitted", &report.transmitted)?;
    for (j, q) in report.decoded.iter().enumerate() {
        write_matrix(&mut w, &format!("decoded_by_{}", j + 1), q)?;
    }
    w.flush()
}
