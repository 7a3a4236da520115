//! Input file ingestion: order logs, graph weight overrides, and synthetic
//! rate tables. Every format is header-checked delimited text and every
//! error names the offending line.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dispatch_core::allocation::{Order, OrderId, Restaurant, RestaurantId};
use dispatch_core::demand::TimeInterval;
use dispatch_core::netgraph::{CellId, DistanceSubgraph, Grid};
use dispatch_core::simulator::OrderStream;

/// One parsed order log record.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderRecord {
    pub order_id: u64,
    pub timestamp: i64,
    pub pickup_cell: CellId,
    pub dropoff_cell: CellId,
    pub fee: f64,
}

const ORDERS_HEADER: &str = "order_id,timestamp,pickup_cell,dropoff_cell,fee";
const GRAPH_HEADER: &str = "src_cell,dst_cell,distance_km";
const RATES_HEADER: &str = "origin_cell,dest_cell,base_rate_per_interval";

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text.lines().map(str::to_string).collect())
}

fn check_header(path: &Path, lines: &[String], expected: &str) -> Result<()> {
    match lines.first() {
        Some(header) if header.trim() == expected => Ok(()),
        Some(header) => bail!(
            "{}: expected header \"{expected}\", found \"{header}\"",
            path.display()
        ),
        None => bail!("{}: empty file, expected header \"{expected}\"", path.display()),
    }
}

/// Seconds since epoch from an integer or an ISO-8601
/// `YYYY-MM-DDTHH:MM:SS[Z]` timestamp.
pub fn parse_timestamp(raw: &str) -> Result<i64> {
    let raw = raw.trim();
    if let Ok(epoch) = raw.parse::<i64>() {
        return Ok(epoch);
    }
    let no_zone = raw.strip_suffix('Z').unwrap_or(raw);
    let (date, time) = no_zone
        .split_once('T')
        .ok_or_else(|| anyhow!("timestamp \"{raw}\" is neither epoch seconds nor ISO-8601"))?;
    let mut date_parts = date.split('-');
    let year: i64 = date_parts.next().unwrap_or("").parse()?;
    let month: u32 = date_parts.next().ok_or_else(|| anyhow!("bad date in \"{raw}\""))?.parse()?;
    let day: i64 = date_parts.next().ok_or_else(|| anyhow!("bad date in \"{raw}\""))?.parse()?;
    let mut time_parts = time.split(':');
    let hour: i64 = time_parts.next().unwrap_or("0").parse()?;
    let minute: i64 = time_parts.next().unwrap_or("0").parse()?;
    let second: i64 = time_parts.next().unwrap_or("0").parse()?;
    if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        bail!("timestamp \"{raw}\": month/day out of range");
    }
    if hour > 23 || minute > 59 || second > 60 {
        bail!("timestamp \"{raw}\": time out of range");
    }
    Ok(days_from_civil(year, month, day) * 86_400 + hour * 3_600 + minute * 60 + second)
}

/// Days since 1970-01-01 (proleptic Gregorian).
fn days_from_civil(year: i64, month: u32, day: i64) -> i64 {
    let y = if month <= 2 { year - 1 } else { year };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (month as i64 + 9) % 12;
    let doy = (153 * mp + 2) / 5 + day - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

/// Parses the order log and buckets records into time intervals relative to
/// the midnight (UTC) of the earliest record's day, so interval indices line
/// up with wall-clock hours.
pub fn ingest_orders(path: &Path, grid: &Grid, interval_minutes: u32) -> Result<OrderStream> {
    let lines = read_lines(path)?;
    check_header(path, &lines, ORDERS_HEADER)?;
    let mut records = Vec::new();
    for (idx, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            bail!("{}:{lineno}: expected 5 fields, found {}", path.display(), fields.len());
        }
        let record = OrderRecord {
            order_id: fields[0]
                .parse()
                .map_err(|e| anyhow!("{}:{lineno}: order_id: {e}", path.display()))?,
            timestamp: parse_timestamp(fields[1])
                .map_err(|e| anyhow!("{}:{lineno}: {e}", path.display()))?,
            pickup_cell: CellId(
                fields[2]
                    .parse()
                    .map_err(|e| anyhow!("{}:{lineno}: pickup_cell: {e}", path.display()))?,
            ),
            dropoff_cell: CellId(
                fields[3]
                    .parse()
                    .map_err(|e| anyhow!("{}:{lineno}: dropoff_cell: {e}", path.display()))?,
            ),
            fee: fields[4]
                .parse()
                .map_err(|e| anyhow!("{}:{lineno}: fee: {e}", path.display()))?,
        };
        for cell in [record.pickup_cell, record.dropoff_cell] {
            if !grid.contains(cell) {
                bail!(
                    "{}:{lineno}: cell {} outside the {}x{} grid",
                    path.display(),
                    cell.0,
                    grid.rows(),
                    grid.cols()
                );
            }
        }
        if record.fee <= 0.0 || !record.fee.is_finite() {
            bail!("{}:{lineno}: fee must be positive", path.display());
        }
        records.push(record);
    }
    records.sort_by_key(|r| (r.timestamp, r.order_id));
    bucket_records(&records, interval_minutes)
}

/// Discretizes sorted records into interval buckets.
pub fn bucket_records(records: &[OrderRecord], interval_minutes: u32) -> Result<OrderStream> {
    let mut restaurants: BTreeMap<RestaurantId, Restaurant> = BTreeMap::new();
    if records.is_empty() {
        return Ok(OrderStream { restaurants: Vec::new(), intervals: Vec::new() });
    }
    let day_start = records[0].timestamp.div_euclid(86_400) * 86_400;
    let span = i64::from(interval_minutes) * 60;
    let mut intervals: Vec<Vec<Order>> = Vec::new();
    for record in records {
        let offset = record.timestamp - day_start;
        if offset < 0 {
            bail!("order {} precedes the scenario day start", record.order_id);
        }
        let index = (offset / span) as u32;
        let interval = TimeInterval::new(index, interval_minutes)
            .map_err(|e| anyhow!("order {}: {e}", record.order_id))?;
        if intervals.len() <= index as usize {
            intervals.resize(index as usize + 1, Vec::new());
        }
        let restaurant_id = RestaurantId(record.pickup_cell.0);
        restaurants
            .entry(restaurant_id)
            .or_insert(Restaurant { id: restaurant_id, cell: record.pickup_cell });
        intervals[index as usize].push(Order {
            id: OrderId(record.order_id),
            restaurant_id,
            dropoff: record.dropoff_cell,
            fee: record.fee,
            placed_at: interval,
            delivered_at: None,
        });
    }
    Ok(OrderStream { restaurants: restaurants.into_values().collect(), intervals })
}

/// Applies per-edge weight overrides from a graph fixture file.
pub fn apply_graph_overrides(
    path: &Path,
    grid: &Grid,
    distance: &mut DistanceSubgraph,
) -> Result<usize> {
    let lines = read_lines(path)?;
    check_header(path, &lines, GRAPH_HEADER)?;
    let mut applied = 0;
    for (idx, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            bail!("{}:{lineno}: expected 3 fields", path.display());
        }
        let src = CellId(fields[0].parse::<u32>().map_err(|e| anyhow!("{}:{lineno}: {e}", path.display()))?);
        let dst = CellId(fields[1].parse::<u32>().map_err(|e| anyhow!("{}:{lineno}: {e}", path.display()))?);
        let weight: f64 = fields[2].parse().map_err(|e| anyhow!("{}:{lineno}: {e}", path.display()))?;
        for cell in [src, dst] {
            if !grid.contains(cell) {
                bail!("{}:{lineno}: cell {} outside the grid", path.display(), cell.0);
            }
        }
        distance
            .override_edge_weight(src, dst, weight)
            .map_err(|e| anyhow!("{}:{lineno}: {e}", path.display()))?;
        applied += 1;
    }
    Ok(applied)
}

/// Loads the synthetic rate table.
pub fn load_rates(path: &Path, grid: &Grid) -> Result<BTreeMap<(CellId, CellId), f64>> {
    let lines = read_lines(path)?;
    check_header(path, &lines, RATES_HEADER)?;
    let mut rates = BTreeMap::new();
    for (idx, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            bail!("{}:{lineno}: expected 3 fields", path.display());
        }
        let origin = CellId(fields[0].parse::<u32>().map_err(|e| anyhow!("{}:{lineno}: {e}", path.display()))?);
        let dest = CellId(fields[1].parse::<u32>().map_err(|e| anyhow!("{}:{lineno}: {e}", path.display()))?);
        let rate: f64 = fields[2].parse().map_err(|e| anyhow!("{}:{lineno}: {e}", path.display()))?;
        for cell in [origin, dest] {
            if !grid.contains(cell) {
                bail!("{}:{lineno}: cell {} outside the grid", path.display(), cell.0);
            }
        }
        if rate < 0.0 {
            bail!("{}:{lineno}: negative rate", path.display());
        }
        rates.insert((origin, dest), rate);
    }
    Ok(rates)
}

/// Renders an order stream back to the log format (epoch-second timestamps).
pub fn render_orders(stream: &OrderStream) -> String {
    let mut out = String::from(ORDERS_HEADER);
    out.push('\n');
    let cell_of: BTreeMap<RestaurantId, CellId> =
        stream.restaurants.iter().map(|r| (r.id, r.cell)).collect();
    for bucket in &stream.intervals {
        for order in bucket {
            let ts = i64::from(order.placed_at.index)
                * i64::from(order.placed_at.length_minutes)
                * 60;
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                order.id.0, ts, cell_of[&order.restaurant_id].0, order.dropoff.0, order.fee
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use dispatch_core::netgraph::build_grid;

    #[test]
    fn timestamps_parse_both_forms() {
        assert_eq!(parse_timestamp("0").unwrap(), 0);
        assert_eq!(parse_timestamp("900").unwrap(), 900);
        assert_eq!(parse_timestamp("1970-01-01T00:15:00Z").unwrap(), 900);
        assert_eq!(parse_timestamp("2022-10-01T12:00:00").unwrap(), 1_664_625_600);
        assert!(parse_timestamp("yesterday").is_err());
        assert!(parse_timestamp("2022-13-01T00:00:00").is_err());
    }

    #[test]
    fn orders_within_ten_minutes_share_a_bucket() {
        let records = vec![
            OrderRecord {
                order_id: 1,
                timestamp: 100,
                pickup_cell: CellId(0),
                dropoff_cell: CellId(1),
                fee: 5.0,
            },
            OrderRecord {
                order_id: 2,
                timestamp: 700,
                pickup_cell: CellId(0),
                dropoff_cell: CellId(2),
                fee: 5.0,
            },
        ];
        let stream = bucket_records(&records, 15).unwrap();
        assert_eq!(stream.intervals.len(), 1);
        assert_eq!(stream.intervals[0].len(), 2);
    }

    #[test]
    fn export_then_reingest_preserves_bucketing() {
        let records = vec![
            OrderRecord {
                order_id: 1,
                timestamp: 0,
                pickup_cell: CellId(0),
                dropoff_cell: CellId(3),
                fee: 8.0,
            },
            OrderRecord {
                order_id: 2,
                timestamp: 3_000,
                pickup_cell: CellId(2),
                dropoff_cell: CellId(1),
                fee: 9.5,
            },
        ];
        let stream = bucket_records(&records, 15).unwrap();
        let rendered = render_orders(&stream);
        let dir = std::env::temp_dir().join("dispatch-ingest-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("orders.csv");
        std::fs::write(&path, &rendered).unwrap();
        let (grid, _) = build_grid(2, 2, 1.0).unwrap();
        let again = ingest_orders(&path, &grid, 15).unwrap();
        assert_eq!(stream, again);
    }

    #[test]
    fn out_of_grid_cell_is_rejected_with_line_number() {
        let dir = std::env::temp_dir().join("dispatch-ingest-test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("orders.csv");
        std::fs::write(&path, "order_id,timestamp,pickup_cell,dropoff_cell,fee\n1,0,9,0,5\n")
            .unwrap();
        let (grid, _) = build_grid(2, 2, 1.0).unwrap();
        let err = ingest_orders(&path, &grid, 15).unwrap_err().to_string();
        assert!(err.contains(":2:"), "error should cite line 2: {err}");
        assert!(err.contains("outside"), "{err}");
    }
}
