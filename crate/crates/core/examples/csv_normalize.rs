//! CSV ingestion, z-score normalization and a chronological split.

use cnforecast::data_io::{
    normalize_apply, normalize_fit, normalize_invert, parse_matrix, split_prefix, SplitSpec,
};
use cnforecast::NormMode;

fn main() -> cnforecast::Result<()> {
    let text =
        "# price,volume,flag\n10.0,2000,1\n10.5,2100,1\n9.8,1800,1\n11.2,2500,1\n10.9,2300,1\n";
    let data = parse_matrix(text)?;
    println!("rows={} cols={}", data.len(), data.dim());

    let params = normalize_fit(&data, NormMode::ZScore)?;
    println!("center={:?}", params.center);
    println!("scale={:?}", params.scale);
    println!("constant_columns={:?}", params.constant_columns);

    let z = normalize_apply(&params, &data)?;
    let back = normalize_invert(&params, &z)?;
    println!("z[0]={:?}", z.row(0));
    println!("round_trip[0]={:?}", back.row(0));

    let (train, test) = split_prefix(&data, SplitSpec { train_count: 4 })?;
    println!("train={} test={}", train.len(), test.len());

    match parse_matrix("1,2\n3,x\n") {
        Err(e) => println!("bad input: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
